#pragma once

#include <functional>
#include <span>
#include <vector>

namespace csm::stats {

// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
double ks_statistic(std::span<const double> sample, const std::function<double(double)> &cdf);
double ks_statistic_normal(std::span<const double> sample);
// Two-sample statistic sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

// Asymptotic p-value of D for effective sample size n (Stephens' correction).
double ks_pvalue(double statistic, double n);
double ks_two_sample_pvalue(double statistic, std::size_t na, std::size_t nb);

double mean(std::span<const double> values);
// Unbiased; 0 for fewer than two values.
double stddev(std::span<const double> values);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> mass;  // probability per bin, sums to 1 when non-empty
  std::size_t count = 0;
};

// Equal-width bins over [lo, hi]; values outside are clamped into the end bins.
// bins == 0 or lo == hi gives a single bin.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);
// One bin per level (value matched exactly); values not in `levels` are dropped.
Histogram level_histogram(std::span<const double> values, std::span<const double> levels);

}  // namespace csm::stats

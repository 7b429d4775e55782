#include "csm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csm/normal.hpp"

namespace csm::stats {

double ks_statistic(std::span<const double> sample, const std::function<double(double)> &cdf) {
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_statistic_normal(std::span<const double> sample) {
  return ks_statistic(sample, [](double v) { return normal_cdf(v); });
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double ks_pvalue(double statistic, double n) {
  const double root = std::sqrt(n);
  const double lambda = (root + 0.12 + 0.11 / root) * statistic;
  if (lambda < 1e-3) return 1.0;
  // Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
  double sum = 0.0, sign = 1.0, previous = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) <= 1e-12 * std::abs(sum) || std::abs(term) <= 1e-16 * previous) break;
    previous = std::abs(term);
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_two_sample_pvalue(double statistic, std::size_t na, std::size_t nb) {
  const double a = static_cast<double>(na), b = static_cast<double>(nb);
  return ks_pvalue(statistic, a * b / (a + b));
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  if (bins == 0 || !(hi > lo)) bins = 1;
  h.mass.assign(bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = 0;
    if (bins > 1) {
      const double pos = std::floor((v - lo) / width);
      b = pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), bins - 1);
    }
    h.mass[b] += 1.0;
    ++h.count;
  }
  if (h.count > 0)
    for (double &m : h.mass) m /= static_cast<double>(h.count);
  return h;
}

Histogram level_histogram(std::span<const double> values, std::span<const double> levels) {
  Histogram h;
  h.mass.assign(levels.size(), 0.0);
  if (!levels.empty()) {
    h.lo = levels.front();
    h.hi = levels.back();
  }
  for (double v : values) {
    const auto it = std::find(levels.begin(), levels.end(), v);
    if (it == levels.end()) continue;
    h.mass[static_cast<std::size_t>(it - levels.begin())] += 1.0;
    ++h.count;
  }
  if (h.count > 0)
    for (double &m : h.mass) m /= static_cast<double>(h.count);
  return h;
}

}  // namespace csm::stats

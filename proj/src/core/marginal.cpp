#include "csm/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csm/error.hpp"
#include "csm/normal.hpp"

namespace csm {

Marginal Marginal::fit(std::span<const double> column, const VariableSpec &spec) {
  spec.validate();
  const std::string who = "variable '" + spec.name + "': ";
  require(!column.empty(), ErrorCode::kInvalidInput, who + "empty column");
  require(column.size() >= 2, ErrorCode::kInvalidInput, who + "at least 2 values required");
  for (double v : column) {
    require(std::isfinite(v), ErrorCode::kInvalidInput, who + "non-finite value");
    if (!spec.continuous())
      require(spec.admits(v), ErrorCode::kInvalidLevel,
              who + "value " + std::to_string(v) + " is not an admissible level");
  }

  if (spec.marginal == MarginalType::kGaussian) {
    const double n = static_cast<double>(column.size());
    const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    const double stddev = std::sqrt(ss / (n - 1.0));
    require(stddev > 0.0, ErrorCode::kDegenerateMarginal,
            who + "zero variance column cannot take a gaussian marginal");
    return gaussian(spec, mean, stddev);
  }
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  return empirical(spec, std::move(sorted));
}

Marginal Marginal::empirical(VariableSpec spec, std::vector<double> sorted_values) {
  require(sorted_values.size() >= 2, ErrorCode::kInvalidInput,
          "empirical marginal needs at least 2 values");
  require(std::is_sorted(sorted_values.begin(), sorted_values.end()), ErrorCode::kFormatError,
          "empirical marginal values must be sorted");
  Marginal m;
  m.spec_ = std::move(spec);
  m.type_ = MarginalType::kEmpirical;
  m.count_ = sorted_values.size();
  m.sorted_ = std::move(sorted_values);
  m.mean_ = std::accumulate(m.sorted_.begin(), m.sorted_.end(), 0.0) / m.count_;
  double ss = 0.0;
  for (double v : m.sorted_) ss += (v - m.mean_) * (v - m.mean_);
  m.stddev_ = std::sqrt(ss / (m.count_ - 1.0));
  m.build_knots();
  return m;
}

Marginal Marginal::gaussian(VariableSpec spec, double mean, double stddev) {
  require(std::isfinite(mean) && std::isfinite(stddev), ErrorCode::kInvalidInput,
          "gaussian marginal parameters must be finite");
  require(stddev > 0.0, ErrorCode::kDegenerateMarginal, "gaussian marginal needs stddev > 0");
  Marginal m;
  m.spec_ = std::move(spec);
  m.type_ = MarginalType::kGaussian;
  m.mean_ = mean;
  m.stddev_ = stddev;
  return m;
}

void Marginal::build_knots() {
  const std::size_t n = sorted_.size();
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && sorted_[hi] == sorted_[lo]) ++hi;
    const double u = plotting_position(0.5 * static_cast<double>(lo + hi + 1), n);
    knot_values_.push_back(sorted_[lo]);
    knot_probs_.push_back(u);
    knot_latent_.push_back(normal_quantile(u));
    upper_latent_.push_back(normal_quantile(plotting_position(hi + 0.5, n)));
    lo = hi;
  }
}

bool Marginal::degenerate() const {
  return type_ == MarginalType::kEmpirical && knot_values_.size() == 1;
}

double Marginal::min_value() const {
  return type_ == MarginalType::kEmpirical ? sorted_.front()
                                           : -std::numeric_limits<double>::infinity();
}

double Marginal::max_value() const {
  return type_ == MarginalType::kEmpirical ? sorted_.back()
                                           : std::numeric_limits<double>::infinity();
}

double Marginal::cdf(double value) const {
  if (!spec_.continuous() && !spec_.admits(value))
    fail(ErrorCode::kInvalidLevel, "variable '" + spec_.name + "': value " +
                                       std::to_string(value) + " is not an admissible level");
  if (std::isnan(value))
    fail(ErrorCode::kInvalidInput, "variable '" + spec_.name + "': NaN value");
  if (type_ == MarginalType::kGaussian) {
    constexpr double kLow = std::numeric_limits<double>::min();
    constexpr double kHigh = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    return std::clamp(normal_cdf((value - mean_) / stddev_), kLow, kHigh);
  }
  if (degenerate()) return 0.5;

  const auto it = std::lower_bound(knot_values_.begin(), knot_values_.end(), value);
  const auto k = static_cast<std::size_t>(it - knot_values_.begin());
  if (it != knot_values_.end() && *it == value) return knot_probs_[k];
  if (!spec_.continuous()) {
    // Admissible but unattained level: boundary between neighbouring plateaus.
    const auto lo = static_cast<std::size_t>(
        std::lower_bound(sorted_.begin(), sorted_.end(), value) - sorted_.begin());
    return plotting_position(lo + 0.5, count_);
  }
  if (k == 0) return knot_probs_.front();
  if (k == knot_values_.size()) return knot_probs_.back();
  const double a = knot_values_[k - 1], b = knot_values_[k];
  const double w = (value - a) / (b - a);
  return knot_probs_[k - 1] + w * (knot_probs_[k] - knot_probs_[k - 1]);
}

double Marginal::to_latent(double value) const {
  if (type_ == MarginalType::kGaussian) {
    if (!std::isfinite(value))
      fail(ErrorCode::kInvalidInput, "variable '" + spec_.name + "': non-finite value");
    return (value - mean_) / stddev_;
  }
  if (degenerate()) {
    cdf(value);  // admissibility check
    return 0.0;
  }
  const auto it = std::lower_bound(knot_values_.begin(), knot_values_.end(), value);
  if (it != knot_values_.end() && *it == value)
    return knot_latent_[static_cast<std::size_t>(it - knot_values_.begin())];
  return normal_quantile(cdf(value));
}

std::size_t Marginal::interval_index(double x) const {
  const auto it = std::upper_bound(upper_latent_.begin(), upper_latent_.end() - 1, x);
  return static_cast<std::size_t>(it - upper_latent_.begin());
}

double Marginal::interpolate_quantile(double u) const {
  if (u <= knot_probs_.front()) return knot_values_.front();
  if (u >= knot_probs_.back()) return knot_values_.back();
  const auto it = std::upper_bound(knot_probs_.begin(), knot_probs_.end(), u);
  const auto k = static_cast<std::size_t>(it - knot_probs_.begin());
  const double u0 = knot_probs_[k - 1], u1 = knot_probs_[k];
  const double w = (u - u0) / (u1 - u0);
  return knot_values_[k - 1] + w * (knot_values_[k] - knot_values_[k - 1]);
}

double Marginal::from_latent(double x) const {
  if (type_ == MarginalType::kGaussian) return mean_ + stddev_ * x;
  if (degenerate()) return knot_values_.front();
  if (!spec_.continuous()) return knot_values_[interval_index(x)];
  // Exact knot hits keep the round trip bit-exact for training values.
  const auto it = std::lower_bound(knot_latent_.begin(), knot_latent_.end(), x);
  if (it != knot_latent_.end() && *it == x)
    return knot_values_[static_cast<std::size_t>(it - knot_latent_.begin())];
  return interpolate_quantile(normal_cdf(x));
}

double Marginal::from_latent_continuous(double x) const {
  if (type_ == MarginalType::kGaussian) return mean_ + stddev_ * x;
  if (degenerate()) return knot_values_.front();
  return interpolate_quantile(normal_cdf(x));
}

}  // namespace csm

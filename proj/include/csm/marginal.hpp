#pragma once

#include <span>
#include <vector>

#include "csm/variable_spec.hpp"

namespace csm {

// Plotting position of rank r (1-based) among M values: r / (M + 1).
inline double plotting_position(double rank, std::size_t count) {
  return rank / static_cast<double>(count + 1);
}

// Invertible one-dimensional marginal distribution W mapping data space to
// (0, 1) and on to the standard normal latent space.
//
// Empirical variant: training values are kept sorted. Every distinct value a
// occupying ranks lo+1..hi sits on a plateau; its CDF value is the mid-plateau
// plotting position ((lo + hi + 1) / 2) / (M + 1). Continuous kinds
// interpolate linearly between distinct-value knots and clamp to the first or
// last knot outside the training range. Non-continuous kinds invert to the
// attained level whose interval [(lo + 0.5), (hi + 0.5)) / (M + 1) contains
// Phi(x).
//
// Gaussian variant: W(v) = Phi((v - mean) / stddev).
class Marginal {
 public:
  Marginal() = default;

  // Throws InvalidInput (empty, M < 2, non-finite), InvalidLevel
  // (non-admissible level), DegenerateMarginal (zero-variance Gaussian) or
  // InvalidConfig (inconsistent spec).
  static Marginal fit(std::span<const double> column, const VariableSpec &spec);

  // Rebuilds a fitted marginal from its stored parameters.
  static Marginal empirical(VariableSpec spec, std::vector<double> sorted_values);
  static Marginal gaussian(VariableSpec spec, double mean, double stddev);

  const VariableSpec &spec() const { return spec_; }
  MarginalType type() const { return type_; }
  bool is_gaussian() const { return type_ == MarginalType::kGaussian; }

  // True when every training value is identical; such variables map to latent 0.
  bool degenerate() const;

  // W(v), strictly inside (0, 1). Throws InvalidLevel for non-admissible values.
  double cdf(double value) const;
  double to_latent(double value) const;
  double from_latent(double x) const;
  // Piecewise-linear quantile regardless of kind (ordinal "continuous scoring").
  double from_latent_continuous(double x) const;

  // Empirical: full sorted training column. Empty for Gaussian.
  const std::vector<double> &sorted_values() const { return sorted_; }
  std::size_t training_size() const { return count_; }
  double mean() const { return mean_; }
  double stddev() const { return stddev_; }
  double min_value() const;
  double max_value() const;
  // Distinct attained values (empirical only).
  const std::vector<double> &knot_values() const { return knot_values_; }

 private:
  void build_knots();
  std::size_t interval_index(double x) const;
  double interpolate_quantile(double u) const;

  VariableSpec spec_;
  MarginalType type_ = MarginalType::kEmpirical;
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double stddev_ = 1.0;

  std::vector<double> sorted_;
  std::vector<double> knot_values_;
  std::vector<double> knot_probs_;
  std::vector<double> knot_latent_;
  // Latent images of the upper interval boundaries (non-continuous inverse).
  std::vector<double> upper_latent_;
};

}  // namespace csm

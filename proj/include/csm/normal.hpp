#pragma once

namespace csm {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x);

// Standard normal CDF, Phi(x).
double normal_cdf(double x);

// Inverse standard normal CDF (Wichura's AS241), accurate to about 1e-16.
// Returns -inf / +inf for p <= 0 / p >= 1.
double normal_quantile(double p);

}  // namespace csm

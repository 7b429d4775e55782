#include <cmath>
#include <vector>

#include "doctest.h"

#include "csm/error.hpp"
#include "csm/marginal.hpp"
#include "csm/normal.hpp"

using namespace csm;

namespace {

// Phi^{-1} by bisection on the erfc-based CDF; slow but independent of AS241.
double bisect_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

template <typename F>
void check_throws_code(F &&f, ErrorCode code) {
  try {
    f();
    FAIL("expected an exception");
  } catch (const Error &e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("normal quantile matches high-precision reference values") {
  // Reference values computed to 22 digits with arbitrary-precision arithmetic.
  struct Ref { double p, x; };
  const Ref refs[] = {
      {0.5, 0.0},
      {0.975, 1.95996398454005423552},
      {0.9, 1.28155156554460046697},
      {0.99, 2.32634787404084110089},
      {0.025, -1.95996398454005423552},
      {1e-10, -6.36134090240405620470},
      {1e-300, -37.0470962993611992372},
      {0.3, -0.524400512708040784038},
  };
  for (const Ref &r : refs) {
    CAPTURE(r.p);
    CHECK(normal_quantile(r.p) == doctest::Approx(r.x).epsilon(1e-15));
  }
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(normal_quantile(0.0) < 0);
  CHECK(std::isinf(normal_quantile(1.0)));
}

TEST_CASE("normal quantile agrees with bisection of the CDF") {
  for (double p = 0.0005; p < 1.0; p += 0.0125) {
    CAPTURE(p);
    CHECK(std::abs(normal_quantile(p) - bisect_quantile(p)) < 1e-12);
  }
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    CHECK(normal_cdf(x) == doctest::Approx(0.5 * std::erfc(-x / std::sqrt(2.0))).epsilon(1e-14));
    // Upper-tail probabilities round to near 1; go through the lower tail.
    const double lo = -std::abs(x);
    CHECK(normal_quantile(normal_cdf(lo)) == doctest::Approx(lo).epsilon(1e-9));
    if (x < 5.0) CHECK(normal_quantile(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("plotting positions of distinct continuous values") {
  const std::vector<double> v = {5, 1, 3};
  const Marginal m = Marginal::fit(v, {.name = "x"});
  CHECK(m.cdf(1) == doctest::Approx(1.0 / 4));
  CHECK(m.cdf(3) == doctest::Approx(2.0 / 4));
  CHECK(m.cdf(5) == doctest::Approx(3.0 / 4));
  // Linear between knots, clamped outside.
  CHECK(m.cdf(2) == doctest::Approx(3.0 / 8));
  CHECK(m.cdf(-10) == doctest::Approx(1.0 / 4));
  CHECK(m.cdf(10) == doctest::Approx(3.0 / 4));
  CHECK(m.to_latent(3) == doctest::Approx(0.0));
  for (double x : v) CHECK(m.from_latent(m.to_latent(x)) == doctest::Approx(x).epsilon(1e-12));
}

TEST_CASE("tied values sit mid-plateau") {
  const std::vector<double> v = {1, 1, 2, 3};
  const Marginal m = Marginal::fit(v, {.name = "x"});
  // Value 1 occupies ranks 1..2: ((0 + 2 + 1) / 2) / 5.
  CHECK(m.cdf(1) == doctest::Approx(0.3));
  CHECK(m.cdf(2) == doctest::Approx(0.6));
  CHECK(m.cdf(3) == doctest::Approx(0.8));
}

TEST_CASE("ordinal inverse projects onto attained levels") {
  const std::vector<double> v = {1, 1, 2, 3};
  const Marginal m = Marginal::fit(v, {.name = "o", .kind = VariableKind::kOrdinal,
                                       .levels = {0, 1, 2, 3}});
  // Level intervals in probability: 1 -> [.1, .5), 2 -> [.5, .7), 3 -> [.7, .9).
  CHECK(m.from_latent(normal_quantile(0.01)) == 1);
  CHECK(m.from_latent(normal_quantile(0.49)) == 1);
  CHECK(m.from_latent(normal_quantile(0.51)) == 2);
  CHECK(m.from_latent(normal_quantile(0.69)) == 2);
  CHECK(m.from_latent(normal_quantile(0.71)) == 3);
  CHECK(m.from_latent(normal_quantile(0.999)) == 3);
  for (double x : v) CHECK(m.from_latent(m.to_latent(x)) == x);
  // Level 0 is admissible but never attained; it maps inside (0, 1).
  CHECK(m.cdf(0) > 0.0);
  CHECK(m.cdf(0) < m.cdf(1));
  check_throws_code([&] { m.cdf(1.5); }, ErrorCode::kInvalidLevel);
  // Continuous scoring interpolates between levels.
  const double mid = m.from_latent_continuous(normal_quantile(0.45));
  CHECK(mid > 1.0);
  CHECK(mid < 2.0);
}

TEST_CASE("binary and discrete admissibility") {
  const std::vector<double> b = {0, 1, 1, 0, 1};
  const Marginal mb = Marginal::fit(b, {.name = "b", .kind = VariableKind::kBinary});
  CHECK(mb.from_latent(mb.to_latent(0)) == 0);
  CHECK(mb.from_latent(mb.to_latent(1)) == 1);
  const std::vector<double> bad = {0, 2, 1};
  check_throws_code([&] { Marginal::fit(bad, {.name = "b", .kind = VariableKind::kBinary}); },
                    ErrorCode::kInvalidLevel);
  const std::vector<double> frac = {0, 1.5, 2};
  check_throws_code([&] { Marginal::fit(frac, {.name = "n", .kind = VariableKind::kDiscrete}); },
                    ErrorCode::kInvalidLevel);
}

TEST_CASE("gaussian marginal uses the unbiased standard deviation") {
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  const Marginal m =
      Marginal::fit(v, {.name = "g", .marginal = MarginalType::kGaussian});
  CHECK(m.mean() == doctest::Approx(5.0));
  CHECK(m.stddev() == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(m.to_latent(5.0 + m.stddev()) == doctest::Approx(1.0));
  CHECK(m.from_latent(-2.0) == doctest::Approx(5.0 - 2 * m.stddev()));
  const std::vector<double> flat = {3, 3, 3};
  check_throws_code(
      [&] { Marginal::fit(flat, {.name = "g", .marginal = MarginalType::kGaussian}); },
      ErrorCode::kDegenerateMarginal);
}

TEST_CASE("degenerate empirical marginal maps to latent zero") {
  const std::vector<double> flat = {3, 3, 3, 3};
  const Marginal m = Marginal::fit(flat, {.name = "x"});
  CHECK(m.degenerate());
  CHECK(m.to_latent(3) == 0.0);
  CHECK(m.from_latent(1.7) == 3);
}

TEST_CASE("fit rejects bad input") {
  const std::vector<double> one = {1};
  check_throws_code([&] { Marginal::fit(one, {.name = "x"}); }, ErrorCode::kInvalidInput);
  const std::vector<double> nan = {1, std::nan(""), 2};
  check_throws_code([&] { Marginal::fit(nan, {.name = "x"}); }, ErrorCode::kInvalidInput);
  check_throws_code(
      [&] {
        Marginal::fit(std::vector<double>{1, 2}, {.name = "o", .kind = VariableKind::kOrdinal});
      },
      ErrorCode::kInvalidConfig);
}

#include <cmath>
#include <random>

#include "doctest.h"

#include "csm/conditional.hpp"
#include "csm/distribution.hpp"
#include "csm/error.hpp"
#include "csm/stats.hpp"
#include "support.hpp"

using namespace csm;

TEST_CASE("one-sample KS statistic by hand") {
  // Uniform CDF; sorted sample .1 .4 .7: D = max(1/3 - .1, 2/3 - .4, 1 - .7, .4 - 1/3, .7 - 2/3)
  const std::vector<double> s = {0.7, 0.1, 0.4};
  const double d = stats::ks_statistic(s, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(d == doctest::Approx(0.3));
  const std::vector<double> z = {0.0};
  CHECK(stats::ks_statistic_normal(z) == doctest::Approx(0.5));
}

TEST_CASE("KS p-values hit tabulated Kolmogorov quantiles") {
  // Asymptotic critical values of sqrt(n) D at 10%, 5% and 1%.
  const double n = 1e10;
  CHECK(stats::ks_pvalue(1.22385 / std::sqrt(n), n) == doctest::Approx(0.10).epsilon(1e-3));
  CHECK(stats::ks_pvalue(1.35810 / std::sqrt(n), n) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(stats::ks_pvalue(1.62762 / std::sqrt(n), n) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(stats::ks_pvalue(0.0, 100) == 1.0);
  CHECK(stats::ks_pvalue(1.0, 100) < 1e-30);
}

TEST_CASE("KS detects a shifted normal and accepts the right one") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  std::vector<double> a(2000), b(2000);
  for (auto &v : a) v = normal(gen);
  for (auto &v : b) v = normal(gen) + 0.3;
  CHECK(stats::ks_pvalue(stats::ks_statistic_normal(a), 2000) > 0.01);
  CHECK(stats::ks_pvalue(stats::ks_statistic_normal(b), 2000) < 1e-6);
  const double d2 = stats::ks_two_sample(a, b);
  CHECK(stats::ks_two_sample_pvalue(d2, 2000, 2000) < 1e-6);
  const std::vector<double> x = {1, 2, 3}, y = {4, 5};
  CHECK(stats::ks_two_sample(x, y) == 1.0);
  CHECK(stats::ks_two_sample(x, x) == 0.0);
}

TEST_CASE("moments and histograms") {
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(stats::mean(v) == 5.0);
  CHECK(stats::stddev(v) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  const auto h = stats::histogram(v, 4, 2, 10);
  // Bins [2,4) [4,6) [6,8) [8,10]: 1, 5, 1, 1.
  REQUIRE(h.mass.size() == 4);
  CHECK(h.mass[0] == doctest::Approx(1.0 / 8));
  CHECK(h.mass[1] == doctest::Approx(5.0 / 8));
  CHECK(h.mass[3] == doctest::Approx(1.0 / 8));
  const auto clamp = stats::histogram(std::vector<double>{-100, 100}, 3, 0, 1);
  CHECK(clamp.mass[0] == 0.5);
  CHECK(clamp.mass[2] == 0.5);
  const std::vector<double> levels = {0, 1, 2};
  const auto lh = stats::level_histogram(std::vector<double>{0, 2, 2, 5}, levels);
  CHECK(lh.count == 3);
  CHECK(lh.mass[2] == doctest::Approx(2.0 / 3));
}

TEST_CASE("distribution report bins levels and continuous ranges") {
  auto mixed = testing::mixed_data(120, 17);
  const JointModel model = fit_joint_model(mixed.data, mixed.specs);
  const auto cm = ConditionalModel::unconditional(model);
  const auto report = sample_distribution_report(cm, {"c0", "bin", "ord"}, 3000, 10, 4);
  REQUIRE(report.size() == 3);
  const auto &c0 = report[0];
  CHECK_FALSE(c0.levels);
  CHECK(c0.edges.size() == 11);
  CHECK(c0.edges.front() == doctest::Approx(model.marginal(0).min_value()));
  CHECK(c0.edges.back() == doctest::Approx(model.marginal(0).max_value()));
  double total = 0;
  for (double m : c0.mass) total += m;
  CHECK(total == doctest::Approx(1.0));
  // Unconditional samples reproduce the training level frequencies.
  const auto &bin = report[1];
  CHECK(bin.levels);
  REQUIRE(bin.mass.size() == 2);
  const double freq = mixed.data.row(3).mean();
  CHECK(bin.mass[1] == doctest::Approx(freq).epsilon(0.1));
  CHECK(report[2].mass.size() == 5);
  CHECK_THROWS_AS(sample_distribution_report(cm, {"nope"}), Error);
}

#include <numeric>
#include <random>

#include "doctest.h"

#include "csm/joint_model.hpp"
#include "csm/kernels.hpp"
#include "csm/normal.hpp"
#include "support.hpp"

using namespace csm;

namespace {

std::vector<Index> all_rows(Index d) {
  std::vector<Index> rows(static_cast<std::size_t>(d));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

kernels::Points random_points(Index n, double scale, std::mt19937_64 &gen) {
  std::uniform_real_distribution<double> u(-scale, scale);
  kernels::Points p(n, 3);
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = u(gen);
  return p;
}

}  // namespace

TEST_CASE("normal score table holds the plotting-position quantiles") {
  const auto table = kernels::normal_score_table(9);
  REQUIRE(table.size() == 9);
  for (std::size_t r = 1; r <= 9; ++r)
    CHECK(table[r - 1] == doctest::Approx(normal_quantile(r / 10.0)).epsilon(1e-15));
}

TEST_CASE("parallel kernels reproduce the serial reference bit for bit") {
  const auto mixed = testing::mixed_data(157, 3);
  const auto marginals = fit_marginals(mixed.data, mixed.specs);
  const auto rows = all_rows(mixed.data.rows());

  for (std::uint64_t ranking : {0u, 1u, 17u}) {
    Eigen::MatrixXd a, b;
    kernels::normal_scores(mixed.data, rows, marginals, 9, ranking, a);
    kernels::reference::normal_scores(mixed.data, rows, marginals, 9, ranking, b);
    CHECK(a == b);
  }

  Eigen::MatrixXd z;
  kernels::normal_scores(mixed.data, rows, marginals, 9, 0, z);
  const Eigen::MatrixXd zt = z.transpose();
  Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(zt.rows(), zt.rows()), g2 = g1;
  kernels::accumulate_gram(zt, 0.5, g1);
  kernels::reference::accumulate_gram(zt, 0.5, g2);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g1 - 0.5 * zt * zt.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd x1, x2;
  kernels::map_from_latent(z, rows, marginals, x1);
  kernels::reference::map_from_latent(z, rows, marginals, x2);
  CHECK(x1 == x2);
}

TEST_CASE("tied values receive each of their ranks equally often") {
  // Values {1, 1, 2}: members 0 and 1 share ranks 1..2.
  const std::vector<double> values = {1, 1, 2};
  const Marginal m = Marginal::fit(values, {.name = "x"});
  const auto table = kernels::normal_score_table(3);
  int first_low = 0;
  const int trials = 4000;
  std::vector<double> out(3);
  for (int t = 0; t < trials; ++t) {
    kernels::normal_scores_row(values, m, table, 5, static_cast<std::uint64_t>(t), 0, out);
    CHECK(out[2] == table[2]);
    const bool low = out[0] == table[0];
    CHECK((low ? out[1] : out[0]) == table[1]);
    first_low += low;
  }
  // Binomial(4000, 1/2): sd ~ 32.
  CHECK(std::abs(first_low - trials / 2) < 160);
}

TEST_CASE("nearest vertex search matches brute force, ties to the lowest index") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 5; ++rep) {
    const auto vertices = random_points(50 + 30 * rep, 10.0, gen);
    auto points = random_points(700, 12.0, gen);
    // Exact ties: a few points equidistant from duplicated vertices.
    kernels::Points dup = vertices;
    dup.row(7) = dup.row(3);
    points.row(0) = dup.row(3);
    const auto got = kernels::nearest_vertices(points, dup);
    const auto ref = kernels::reference::nearest_vertices(points, dup);
    for (Index i = 0; i < points.rows(); ++i) {
      Index best = 0;
      double bd = (points.row(i) - dup.row(0)).squaredNorm();
      for (Index v = 1; v < dup.rows(); ++v) {
        const double dv = (points.row(i) - dup.row(v)).squaredNorm();
        if (dv < bd) bd = dv, best = v;
      }
      CHECK(got[static_cast<std::size_t>(i)] == best);
      CHECK(ref[static_cast<std::size_t>(i)] == best);
    }
    CHECK(got[0] == 3);
    const auto counts = kernels::nearest_vertex_counts(points, dup);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) == 700);
    CHECK(counts == kernels::reference::nearest_vertex_counts(points, dup));
  }
}

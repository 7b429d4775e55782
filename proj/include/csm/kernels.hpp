#pragma once

// Data-parallel inner loops of fitting, sampling and voxel assignment.
//
// Every kernel in csm::kernels is OpenMP-parallel and bit-reproducible: work
// is partitioned so that each output element is produced by exactly one
// thread in a fixed arithmetic order, independent of the thread count. The
// csm::kernels::reference namespace holds straightforward serial versions
// kept as test oracles and as the baseline for bench/bench_kernels.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "csm/marginal.hpp"

namespace csm::kernels {

using Index = Eigen::Index;
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

int max_threads();

// Phi^{-1}(r / (M + 1)) for r = 1..M.
std::vector<double> normal_score_table(std::size_t count);

// One row of the tie-broken latent training matrix. Gaussian marginals
// standardize; degenerate rows map to zero; empirical rows get the normal
// score of their rank, tied values receiving a random permutation of the
// ranks they jointly occupy. The permutation stream is keyed on
// (seed, ranking, row) so rows without ties never consume randomness.
void normal_scores_row(std::span<const double> values, const Marginal &marginal,
                       std::span<const double> score_table, std::uint64_t seed,
                       std::uint64_t ranking, std::uint64_t row, std::span<double> out);

// Latent rows for the given row indices of Y (d x M): out is rows.size() x M.
void normal_scores(const Eigen::MatrixXd &data, std::span<const Index> rows,
                   std::span<const Marginal> marginals, std::uint64_t seed,
                   std::uint64_t ranking, Eigen::MatrixXd &out);

// gram += scale * X * X^T (full symmetric result), tiled over output blocks.
void accumulate_gram(const Eigen::MatrixXd &x, double scale, Eigen::MatrixXd &gram);

// counts[i] = number of points whose nearest vertex is i (Euclidean, ties to
// the lowest vertex index). Exact; uses a uniform grid.
std::vector<std::uint64_t> nearest_vertex_counts(const Points &points, const Points &vertices);

// Nearest vertex index for each point (same contract as above).
std::vector<Index> nearest_vertices(const Points &points, const Points &vertices);

// out(i, j) = marginals[rows[i]].from_latent(latent(i, j)).
void map_from_latent(const Eigen::MatrixXd &latent, std::span<const Index> rows,
                     std::span<const Marginal> marginals, Eigen::MatrixXd &out);

namespace reference {

void normal_scores(const Eigen::MatrixXd &data, std::span<const Index> rows,
                   std::span<const Marginal> marginals, std::uint64_t seed,
                   std::uint64_t ranking, Eigen::MatrixXd &out);
void accumulate_gram(const Eigen::MatrixXd &x, double scale, Eigen::MatrixXd &gram);
std::vector<Index> nearest_vertices(const Points &points, const Points &vertices);
std::vector<std::uint64_t> nearest_vertex_counts(const Points &points, const Points &vertices);
void map_from_latent(const Eigen::MatrixXd &latent, std::span<const Index> rows,
                     std::span<const Marginal> marginals, Eigen::MatrixXd &out);

}  // namespace reference
}  // namespace csm::kernels

#include "csm/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "csm/error.hpp"
#include "csm/normal.hpp"
#include "csm/rng.hpp"

namespace csm::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<double> normal_score_table(std::size_t count) {
  std::vector<double> table(count);
  for (std::size_t r = 0; r < count; ++r)
    table[r] = normal_quantile(plotting_position(static_cast<double>(r + 1), count));
  return table;
}

namespace {

void shuffle_ranks(std::span<std::size_t> ranks, Rng &rng) {
  for (std::size_t i = ranks.size(); i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(ranks[i], ranks[j]);
  }
}

bool passthrough_row(std::span<const double> values, const Marginal &marginal,
                     std::span<double> out) {
  if (marginal.is_gaussian()) {
    for (std::size_t j = 0; j < values.size(); ++j) out[j] = marginal.to_latent(values[j]);
    return true;
  }
  if (marginal.degenerate()) {
    std::fill(out.begin(), out.end(), 0.0);
    return true;
  }
  return false;
}

}  // namespace

void normal_scores_row(std::span<const double> values, const Marginal &marginal,
                       std::span<const double> score_table, std::uint64_t seed,
                       std::uint64_t ranking, std::uint64_t row, std::span<double> out) {
  if (passthrough_row(values, marginal, out)) return;
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::optional<Rng> rng;
  std::vector<std::size_t> ranks;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && values[order[hi]] == values[order[lo]]) ++hi;
    if (hi - lo == 1) {
      out[order[lo]] = score_table[lo];
    } else {
      if (!rng) rng.emplace(derive_seed(seed, ranking, row));
      ranks.resize(hi - lo);
      std::iota(ranks.begin(), ranks.end(), lo);
      shuffle_ranks(ranks, *rng);
      for (std::size_t k = 0; k < ranks.size(); ++k) out[order[lo + k]] = score_table[ranks[k]];
    }
    lo = hi;
  }
}

void normal_scores(const Eigen::MatrixXd &data, std::span<const Index> rows,
                   std::span<const Marginal> marginals, std::uint64_t seed,
                   std::uint64_t ranking, Eigen::MatrixXd &out) {
  const Index m = data.cols();
  const Index count = static_cast<Index>(rows.size());
  out.resize(count, m);
  const auto table = normal_score_table(static_cast<std::size_t>(m));
#pragma omp parallel
  {
    std::vector<double> values(m), scores(m);
#pragma omp for schedule(dynamic, 16)
    for (Index k = 0; k < count; ++k) {
      const Index i = rows[k];
      for (Index j = 0; j < m; ++j) values[j] = data(i, j);
      normal_scores_row(values, marginals[i], table, seed, ranking,
                        static_cast<std::uint64_t>(i), scores);
      for (Index j = 0; j < m; ++j) out(k, j) = scores[j];
    }
  }
}

void accumulate_gram(const Eigen::MatrixXd &x, double scale, Eigen::MatrixXd &gram) {
  constexpr Index kTile = 128;
  const Index n = x.rows();
  require(gram.rows() == n && gram.cols() == n, ErrorCode::kInvalidInput,
          "accumulate_gram: size mismatch");
  std::vector<std::array<Index, 2>> tiles;
  for (Index i = 0; i < n; i += kTile)
    for (Index j = 0; j <= i; j += kTile) tiles.push_back({i, j});

#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    const auto [i0, j0] = tiles[t];
    const Index hi = std::min(kTile, n - i0), hj = std::min(kTile, n - j0);
    gram.block(i0, j0, hi, hj).noalias() +=
        scale * x.middleRows(i0, hi) * x.middleRows(j0, hj).transpose();
  }
  // Mirror the lower triangle so the result is exactly symmetric.
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) gram(j, i) = gram(i, j);
}

namespace {

struct VertexGrid {
  std::array<double, 3> origin{};
  double cell = 1.0;
  std::array<Index, 3> dims{1, 1, 1};
  std::vector<Index> start;  // CSR offsets, size cells + 1
  std::vector<Index> items;

  Index flat(Index x, Index y, Index z) const { return (z * dims[1] + y) * dims[0] + x; }

  Index clamp_cell(double v, int axis) const {
    const double c = std::floor((v - origin[axis]) / cell);
    if (!(c >= 0.0)) return 0;
    return std::min<Index>(static_cast<Index>(c), dims[axis] - 1);
  }
};

VertexGrid build_grid(const Points &vertices) {
  VertexGrid grid;
  const Index n = vertices.rows();
  std::array<double, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = vertices.col(a).minCoeff();
    hi[a] = vertices.col(a).maxCoeff();
  }
  const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  const double per_axis = std::max(1.0, std::ceil(std::cbrt(static_cast<double>(n))));
  grid.cell = extent > 0.0 ? extent / per_axis : 1.0;
  for (int a = 0; a < 3; ++a) {
    grid.origin[a] = lo[a];
    grid.dims[a] = std::clamp<Index>(
        static_cast<Index>(std::floor((hi[a] - lo[a]) / grid.cell)) + 1, 1, 1024);
  }
  const Index cells = grid.dims[0] * grid.dims[1] * grid.dims[2];
  std::vector<Index> owner(n);
  grid.start.assign(cells + 1, 0);
  for (Index v = 0; v < n; ++v) {
    owner[v] = grid.flat(grid.clamp_cell(vertices(v, 0), 0), grid.clamp_cell(vertices(v, 1), 1),
                         grid.clamp_cell(vertices(v, 2), 2));
    ++grid.start[owner[v] + 1];
  }
  std::partial_sum(grid.start.begin(), grid.start.end(), grid.start.begin());
  grid.items.resize(n);
  std::vector<Index> fill(grid.start.begin(), grid.start.end() - 1);
  for (Index v = 0; v < n; ++v) grid.items[fill[owner[v]]++] = v;
  return grid;
}

double squared_distance(const Points &a, Index i, const Points &b, Index j) {
  const double dx = a(i, 0) - b(j, 0), dy = a(i, 1) - b(j, 1), dz = a(i, 2) - b(j, 2);
  return dx * dx + dy * dy + dz * dz;
}

Index grid_nearest(const VertexGrid &grid, const Points &vertices, const Points &points,
                   Index p) {
  const Index cx = grid.clamp_cell(points(p, 0), 0);
  const Index cy = grid.clamp_cell(points(p, 1), 1);
  const Index cz = grid.clamp_cell(points(p, 2), 2);
  const Index max_shell = std::max({grid.dims[0], grid.dims[1], grid.dims[2]});
  double best = std::numeric_limits<double>::infinity();
  Index best_index = -1;
  for (Index s = 0; s <= max_shell; ++s) {
    for (Index z = std::max<Index>(0, cz - s); z <= std::min(grid.dims[2] - 1, cz + s); ++z)
      for (Index y = std::max<Index>(0, cy - s); y <= std::min(grid.dims[1] - 1, cy + s); ++y)
        for (Index x = std::max<Index>(0, cx - s); x <= std::min(grid.dims[0] - 1, cx + s);
             ++x) {
          if (std::max({std::abs(x - cx), std::abs(y - cy), std::abs(z - cz)}) != s) continue;
          const Index cell = grid.flat(x, y, z);
          for (Index k = grid.start[cell]; k < grid.start[cell + 1]; ++k) {
            const Index v = grid.items[k];
            const double d = squared_distance(points, p, vertices, v);
            if (d < best || (d == best && v < best_index)) {
              best = d;
              best_index = v;
            }
          }
        }
    // Anything in shell s + 1 or beyond is at least s cells away.
    const double bound = static_cast<double>(s) * grid.cell * (1.0 - 1e-9);
    if (best_index >= 0 && best < bound * bound) break;
  }
  return best_index;
}

}  // namespace

std::vector<Index> nearest_vertices(const Points &points, const Points &vertices) {
  const Index count = points.rows();
  std::vector<Index> nearest(count, -1);
  if (vertices.rows() == 0 || count == 0) return nearest;
  const VertexGrid grid = build_grid(vertices);
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < count; ++p) nearest[p] = grid_nearest(grid, vertices, points, p);
  return nearest;
}

std::vector<std::uint64_t> nearest_vertex_counts(const Points &points, const Points &vertices) {
  std::vector<std::uint64_t> counts(vertices.rows(), 0);
  for (Index v : nearest_vertices(points, vertices))
    if (v >= 0) ++counts[v];
  return counts;
}

void map_from_latent(const Eigen::MatrixXd &latent, std::span<const Index> rows,
                     std::span<const Marginal> marginals, Eigen::MatrixXd &out) {
  const Index count = static_cast<Index>(rows.size());
  out.resize(count, latent.cols());
  // Row-major sweep keeps one marginal's table hot while it is used.
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < count; ++i) {
    const Marginal &marginal = marginals[rows[i]];
    for (Index j = 0; j < latent.cols(); ++j) out(i, j) = marginal.from_latent(latent(i, j));
  }
}

namespace reference {

void normal_scores(const Eigen::MatrixXd &data, std::span<const Index> rows,
                   std::span<const Marginal> marginals, std::uint64_t seed,
                   std::uint64_t ranking, Eigen::MatrixXd &out) {
  const Index m = data.cols();
  out.resize(static_cast<Index>(rows.size()), m);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    std::vector<double> values(m), scores(m);
    for (Index j = 0; j < m; ++j) values[j] = data(i, j);
    if (!passthrough_row(values, marginals[i], scores)) {
      // Group members by value, ascending; members in ascending index order.
      std::map<double, std::vector<Index>> groups;
      for (Index j = 0; j < m; ++j) groups[values[j]].push_back(j);
      std::optional<Rng> rng;
      std::size_t below = 0;
      for (const auto &[value, members] : groups) {
        std::vector<std::size_t> ranks(members.size());
        std::iota(ranks.begin(), ranks.end(), below);
        if (members.size() > 1) {
          if (!rng) rng.emplace(derive_seed(seed, ranking, static_cast<std::uint64_t>(i)));
          shuffle_ranks(ranks, *rng);
        }
        for (std::size_t t = 0; t < members.size(); ++t)
          scores[members[t]] = normal_quantile(
              plotting_position(static_cast<double>(ranks[t] + 1), static_cast<std::size_t>(m)));
        below += members.size();
      }
    }
    for (Index j = 0; j < m; ++j) out(static_cast<Index>(k), j) = scores[j];
  }
}

void accumulate_gram(const Eigen::MatrixXd &x, double scale, Eigen::MatrixXd &gram) {
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (Index k = 0; k < x.cols(); ++k) sum += x(i, k) * x(j, k);
      gram(i, j) += scale * sum;
      gram(j, i) = gram(i, j);
    }
}

std::vector<Index> nearest_vertices(const Points &points, const Points &vertices) {
  std::vector<Index> nearest(points.rows(), -1);
  for (Index p = 0; p < points.rows(); ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (Index v = 0; v < vertices.rows(); ++v) {
      const double d = squared_distance(points, p, vertices, v);
      if (d < best) {
        best = d;
        nearest[p] = v;
      }
    }
  }
  return nearest;
}

std::vector<std::uint64_t> nearest_vertex_counts(const Points &points, const Points &vertices) {
  std::vector<std::uint64_t> counts(vertices.rows(), 0);
  for (Index v : nearest_vertices(points, vertices))
    if (v >= 0) ++counts[v];
  return counts;
}

void map_from_latent(const Eigen::MatrixXd &latent, std::span<const Index> rows,
                     std::span<const Marginal> marginals, Eigen::MatrixXd &out) {
  out.resize(static_cast<Index>(rows.size()), latent.cols());
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = marginals[rows[i]].from_latent(latent(i, j));
}

}  // namespace reference
}  // namespace csm::kernels

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "csm/error.hpp"
#include "csm/synth.hpp"

namespace csm::synth {

namespace {

// Splits `total` over rings proportionally to `weights`, each ring >= 3
// (largest remainder, ties to the lower ring index).
std::vector<Index> ring_sizes(Index total, const std::vector<double> &weights) {
  const Index rings = static_cast<Index>(weights.size());
  std::vector<Index> sizes(weights.size(), 3);
  Index spare = total - 3 * rings;
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::pair<double, Index>> remainder;
  Index assigned = 0;
  for (Index i = 0; i < rings; ++i) {
    const double share = spare * weights[static_cast<std::size_t>(i)] / sum;
    const Index whole = static_cast<Index>(std::floor(share));
    sizes[static_cast<std::size_t>(i)] += whole;
    assigned += whole;
    remainder.emplace_back(share - static_cast<double>(whole), i);
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (Index k = 0; k < spare - assigned; ++k) ++sizes[static_cast<std::size_t>(remainder[k].second)];
  return sizes;
}

}  // namespace

shape::TriangleMesh uv_sphere(Index n) {
  require(n >= 5, ErrorCode::kInvalidConfig, "a closed sphere mesh needs at least 5 vertices");
  constexpr double kPi = std::numbers::pi;
  Index rings = std::max<Index>(1, std::llround(std::sqrt(kPi * static_cast<double>(n - 2) / 4.0)));
  rings = std::min(rings, (n - 2) / 3);
  std::vector<double> theta, weights;
  for (Index i = 1; i <= rings; ++i) {
    theta.push_back(kPi * static_cast<double>(i) / static_cast<double>(rings + 1));
    weights.push_back(std::sin(theta.back()));
  }
  const std::vector<Index> sizes = ring_sizes(n - 2, weights);

  shape::TriangleMesh mesh;
  mesh.vertices.resize(n, 3);
  mesh.vertices.row(0) << 0.0, 0.0, 1.0;
  std::vector<Index> start;
  std::vector<double> offset;
  Index next = 1;
  for (Index i = 0; i < rings; ++i) {
    const Index size = sizes[static_cast<std::size_t>(i)];
    start.push_back(next);
    offset.push_back(i % 2 == 0 ? 0.0 : 0.5);
    const double t = theta[static_cast<std::size_t>(i)];
    for (Index k = 0; k < size; ++k) {
      const double phi = 2.0 * kPi * (static_cast<double>(k) + offset.back()) / size;
      mesh.vertices.row(next++) << std::sin(t) * std::cos(phi), std::sin(t) * std::sin(phi),
          std::cos(t);
    }
  }
  const Index south = n - 1;
  mesh.vertices.row(south) << 0.0, 0.0, -1.0;

  // Faces are wound counter-clockwise seen from outside.
  const Index first = sizes.front();
  for (Index k = 0; k < first; ++k)
    mesh.faces.push_back({0, start[0] + k, start[0] + (k + 1) % first});
  for (Index i = 0; i + 1 < rings; ++i) {
    const Index na = sizes[static_cast<std::size_t>(i)], nb = sizes[static_cast<std::size_t>(i + 1)];
    const Index a0 = start[static_cast<std::size_t>(i)], b0 = start[static_cast<std::size_t>(i + 1)];
    const auto angle = [](Index k, double off, Index size) {
      return (static_cast<double>(k) + off) / static_cast<double>(size);
    };
    Index a = 0, b = 0;
    while (a < na || b < nb) {
      const bool advance_a =
          a < na && (b == nb || angle(a + 1, offset[static_cast<std::size_t>(i)], na) <=
                                    angle(b + 1, offset[static_cast<std::size_t>(i + 1)], nb));
      if (advance_a) {
        mesh.faces.push_back({a0 + a % na, b0 + b % nb, a0 + (a + 1) % na});
        ++a;
      } else {
        mesh.faces.push_back({a0 + a % na, b0 + b % nb, b0 + (b + 1) % nb});
        ++b;
      }
    }
  }
  const Index last = sizes.back(), l0 = start.back();
  for (Index k = 0; k < last; ++k) mesh.faces.push_back({south, l0 + (k + 1) % last, l0 + k});
  return mesh;
}

}  // namespace csm::synth

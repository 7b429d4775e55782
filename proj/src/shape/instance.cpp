#include <string>

#include "csm/error.hpp"
#include "csm/shape.hpp"

namespace csm::shape {

void TriangleMesh::validate() const {
  const Index n = vertex_count();
  require(vertices.allFinite(), ErrorCode::kInvalidInput, "mesh vertices must be finite");
  for (const Face &f : faces) {
    for (Index v : f)
      require(v >= 0 && v < n, ErrorCode::kInvalidInput,
              "face index " + std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
    require(f[0] != f[1] && f[1] != f[2] && f[0] != f[2], ErrorCode::kInvalidInput,
            "degenerate face");
  }
}

Eigen::VectorXd vectorize(const Points &vertices, const FeatureField &features,
                          const Eigen::VectorXd &indicators, const InstanceLayout &layout) {
  const Index n = layout.vertex_count;
  require(vertices.rows() == n, ErrorCode::kLayoutMismatch,
          "mesh has " + std::to_string(vertices.rows()) + " vertices, layout expects " +
              std::to_string(n));
  require(features.size() == n, ErrorCode::kLayoutMismatch,
          "feature field length does not match vertex count");
  require(indicators.size() == layout.indicator_count(), ErrorCode::kLayoutMismatch,
          "indicator count does not match layout");
  Eigen::VectorXd y(layout.dimension());
  // Row-major N x 3 storage is already the interleaved coordinate order.
  y.head(3 * n) = Eigen::Map<const Eigen::VectorXd>(vertices.data(), 3 * n);
  y.segment(3 * n, n) = features;
  y.tail(layout.indicator_count()) = indicators;
  return y;
}

Eigen::VectorXd vectorize(const TriangleMesh &mesh, const FeatureField &features,
                          const Eigen::VectorXd &indicators, const InstanceLayout &layout) {
  return vectorize(mesh.vertices, features, indicators, layout);
}

InstanceParts devectorize(const Eigen::VectorXd &instance, const InstanceLayout &layout) {
  require(instance.size() == layout.dimension(), ErrorCode::kLayoutMismatch,
          "instance length " + std::to_string(instance.size()) + " does not match d = " +
              std::to_string(layout.dimension()));
  const Index n = layout.vertex_count;
  InstanceParts parts;
  parts.vertices = Eigen::Map<const Points>(instance.data(), n, 3);
  parts.features = instance.segment(3 * n, n);
  parts.indicators = instance.tail(layout.indicator_count());
  return parts;
}

FeatureField assign_voxels_to_vertices(const Points &voxel_centers, const TriangleMesh &mesh) {
  FeatureField values = FeatureField::Zero(mesh.vertex_count());
  if (voxel_centers.rows() == 0) return values;
  require(mesh.vertex_count() > 0, ErrorCode::kInvalidInput, "mesh has no vertices");
  const std::vector<std::uint64_t> counts =
      kernels::nearest_vertex_counts(voxel_centers, mesh.vertices);
  for (Index i = 0; i < values.size(); ++i) values[i] = static_cast<double>(counts[i]);
  return values;
}

}  // namespace csm::shape

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "csm/kernels.hpp"
#include "csm/layout.hpp"
#include "csm/variable_spec.hpp"

namespace csm::shape {

using Points = kernels::Points;
using FeatureField = Eigen::VectorXd;

struct TriangleMesh {
  Points vertices;  // N x 3, millimetres
  std::vector<Face> faces;

  Index vertex_count() const { return vertices.rows(); }
  // Throws InvalidInput on out-of-range or degenerate faces.
  void validate() const;
};

struct InstanceParts {
  Points vertices;
  FeatureField features;
  Eigen::VectorXd indicators;
};

// y = [x_1, y_1, z_1, ..., f_1, ..., f_N, a_1, ..., a_K]. Throws LayoutMismatch.
Eigen::VectorXd vectorize(const Points &vertices, const FeatureField &features,
                          const Eigen::VectorXd &indicators, const InstanceLayout &layout);
Eigen::VectorXd vectorize(const TriangleMesh &mesh, const FeatureField &features,
                          const Eigen::VectorXd &indicators, const InstanceLayout &layout);
InstanceParts devectorize(const Eigen::VectorXd &instance, const InstanceLayout &layout);

// values[i] = number of voxel centres whose nearest vertex is i (exact
// Euclidean search, ties to the lowest index).
FeatureField assign_voxels_to_vertices(const Points &voxel_centers, const TriangleMesh &mesh);

// Mesh files. Reading dispatches on content: "CSM1" header, "ply" header, or
// Wavefront OBJ otherwise. Throws FormatError / IoError.
TriangleMesh read_mesh(const std::filesystem::path &path);
TriangleMesh parse_csm1(const std::string &text);
TriangleMesh parse_obj(const std::string &text);
TriangleMesh parse_ply(const std::string &text);
std::string format_csm1(const TriangleMesh &mesh);

// Whitespace separated "x y z" lines; '#' starts a comment.
Points read_points(const std::filesystem::path &path);
// One value per line.
FeatureField read_feature_field(const std::filesystem::path &path);

// Delimiter-separated table keyed by the `id` column. The delimiter is a tab
// when the header contains one, a comma otherwise.
struct IndicatorTable {
  std::vector<std::string> columns;  // excluding `id`
  std::map<std::string, std::vector<std::string>> rows;

  const std::string &field(const std::string &id, const std::string &column) const;
};
IndicatorTable parse_indicator_table(const std::string &text);
IndicatorTable read_indicator_table(const std::filesystem::path &path);

// Variable declarations for a cohort: one spec per indicator plus templates
// applied to every coordinate and feature component.
struct CohortSpec {
  std::vector<VariableSpec> indicators;
  VariableSpec coordinate{.name = "coordinate", .block = Block::kCoordinate};
  VariableSpec feature{.name = "feature", .block = Block::kFeature};
  std::string volume_indicator;  // computed as the sum of the feature field
};
CohortSpec parse_cohort_spec(const std::string &text);
CohortSpec read_cohort_spec(const std::filesystem::path &path);
std::string format_cohort_spec(const CohortSpec &spec);

// Full per-component spec list (length d) with component names from the layout.
std::vector<VariableSpec> expand_specs(const CohortSpec &spec, const InstanceLayout &layout);

struct Cohort {
  std::vector<std::string> ids;  // sorted
  Eigen::MatrixXd data;          // d x M
  InstanceLayout layout;
  std::vector<VariableSpec> specs;
};

// Reads <id>.csm / .obj / .ply meshes from mesh_dir with a per-vertex feature
// file <id>.feat or a voxel-centre list <id>.vox next to each. Throws
// CorrespondenceError (vertex count or face list differs), MissingRecord (no
// indicator row or feature file) or FormatError.
Cohort load_cohort(const std::filesystem::path &mesh_dir,
                   const std::filesystem::path &indicators_file, const CohortSpec &spec);

// Writes meshes (<id>.csm), feature fields (<id>.feat), indicators.tsv and
// spec.json into dir, in the layout load_cohort reads back.
void write_cohort(const std::filesystem::path &dir, const std::vector<std::string> &ids,
                  const Eigen::MatrixXd &data, const InstanceLayout &layout,
                  const CohortSpec &spec);

}  // namespace csm::shape

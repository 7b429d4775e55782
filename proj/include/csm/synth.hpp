#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csm/cross_validation.hpp"
#include "csm/joint_model.hpp"
#include "csm/shape.hpp"

namespace csm::synth {

// Names of the standard indicators in generation order; a config with K < 9
// keeps the first K.
const std::vector<std::string> &standard_indicator_names();

struct SyntheticConfig {
  Index instances = 793;
  Index vertices = 200;
  Index indicators = 9;
  Index factors = 6;
  double shape_strength = 0.06;     // relative radius change per unit factor
  double feature_strength = 0.5;    // log-intensity change per unit factor
  double indicator_strength = 0.8;  // norm of each indicator's factor weights
  double noise = 1.0;               // scales every idiosyncratic noise term
  double shape_noise_mm = 0.4;
  double feature_noise = 0.5;       // log scale
  std::uint64_t seed = 42;

  // Throws InvalidConfig.
  void validate() const;
};

struct GroundTruth {
  Eigen::MatrixXd factors;            // F x M
  Eigen::MatrixXd shape_loadings;     // F x S basis coefficients
  Eigen::MatrixXd feature_loadings;   // F x S
  Eigen::MatrixXd indicator_weights;  // K x F
  Eigen::MatrixXd indicator_scores;   // K x M, before level mapping
};

struct SyntheticCohort {
  std::vector<std::string> ids;
  shape::TriangleMesh reference;        // unit-free template sphere (topology)
  std::vector<shape::Points> meshes;    // per instance, N x 3
  Eigen::MatrixXd features;             // N x M
  Eigen::MatrixXd indicators;           // K x M
  Eigen::MatrixXd data;                 // d x M
  InstanceLayout layout;
  shape::CohortSpec spec;
  std::vector<VariableSpec> specs;      // length d
  GroundTruth truth;
};

// Closed triangulated sphere with exactly n >= 5 vertices: two poles and
// latitude rings whose sizes follow sin(theta), stitched ring to ring.
shape::TriangleMesh uv_sphere(Index n);

SyntheticCohort generate_cohort(const SyntheticConfig &config);

// ---------------------------------------------------------------------------
// Reconstruction experiment

inline const std::vector<std::string> kDefaultTargets = {"age", "mrs", "sex", "ventricles",
                                                         "wmh"};
inline const std::vector<std::string> kColumns = {"mean",       "ventricles", "wmh",
                                                  "indicators", "ind+vol",    "combined"};

struct ExperimentOptions {
  std::optional<Index> train_size;  // default: round(M * 600 / 793)
  std::uint64_t seed = 42;          // split and cross-validation folds
  FitConfig fit;
  bool cross_validate = true;
  std::map<Block, std::vector<double>> sigma_grid = default_sigma_grid();
  int folds = 3;
  BlockSigma sigma;  // used as-is when cross_validate is false
  std::vector<std::string> targets = kDefaultTargets;
  bool include_self = false;
  // Score ordinal targets on the piecewise-linear quantile instead of the
  // projected level.
  bool continuous_ordinal = false;
};

struct ReportRow {
  std::string target;
  std::string metric;  // abs_error | vertex_distance_mm | feature_abs_error | percent_correct
  std::string column;
  Index count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double stderr_ = 0.0;

  bool higher_is_better() const { return metric == "percent_correct"; }
};

struct ExperimentReport {
  Index train_size = 0;
  Index validation_size = 0;
  std::uint64_t seed = 0;
  BlockSigma sigma;
  std::vector<ReportRow> rows;  // targets in request order, columns in kColumns order

  const ReportRow *find(const std::string &target, const std::string &column) const;
  std::string to_tsv() const;
  std::string to_table() const;
};

// Observed components for a column when predicting `target`.
std::vector<Index> observed_components(const InstanceLayout &layout, const std::string &target,
                                       const std::string &column);

// Throws InvalidTask for unknown targets or columns.
ExperimentReport run_reconstruction_experiment(const Eigen::MatrixXd &data,
                                               const std::vector<VariableSpec> &specs,
                                               const InstanceLayout &layout,
                                               const ExperimentOptions &options = {});

}  // namespace csm::synth

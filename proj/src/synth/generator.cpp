#include <cmath>

#include "csm/error.hpp"
#include "csm/rng.hpp"
#include "csm/synth.hpp"

namespace csm::synth {

namespace {

constexpr std::uint64_t kFactorStream = 1, kLoadingStream = 2, kShapeNoise = 3,
                        kFeatureNoise = 4, kIndicatorNoise = 5;

// Ellipsoid semi-axes of the template (mm) and the smooth basis on the sphere
// that factors act through.
constexpr double kRadii[3] = {18.0, 30.0, 14.0};
constexpr Index kBasisSize = 8;

Eigen::Matrix<double, kBasisSize, 1> smooth_basis(double x, double y, double z) {
  Eigen::Matrix<double, kBasisSize, 1> phi;
  phi << 1.0, x, y, z, x * x - y * y, 3.0 * z * z - 1.0, x * y, x * z;
  return phi;
}

Eigen::MatrixXd unit_rows(Rng &rng, Index rows, Index cols, double norm) {
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    m.row(i) *= norm / m.row(i).norm();
  }
  return m;
}

double level_of(double score, std::initializer_list<double> thresholds, double first) {
  double level = first;
  for (double t : thresholds)
    if (score > t) level += 1.0;
  return level;
}

VariableSpec binary(const std::string &name, std::vector<std::string> labels) {
  return {.name = name, .kind = VariableKind::kBinary, .levels = {0.0, 1.0},
          .level_labels = std::move(labels)};
}

VariableSpec ordinal(const std::string &name, int lo, int hi) {
  VariableSpec s{.name = name, .kind = VariableKind::kOrdinal};
  for (int v = lo; v <= hi; ++v) s.levels.push_back(v);
  return s;
}

std::vector<VariableSpec> standard_specs() {
  return {{.name = "age"},
          binary("sex", {"female", "male"}),
          binary("hypertension", {"no", "yes"}),
          binary("hyperlipidemia", {"no", "yes"}),
          binary("afib", {"no", "yes"}),
          ordinal("smoking", 1, 6),
          ordinal("nihss", 0, 42),
          ordinal("mrs", 0, 6),
          {.name = "wmh_volume"}};
}

// Maps a standard-normal score to indicator j's data scale.
double indicator_value(std::size_t j, double s, double volume) {
  switch (j) {
    case 0: return 65.0 + 12.0 * s;
    case 1: return s > 0.0 ? 1.0 : 0.0;
    case 2: return s > -0.5 ? 1.0 : 0.0;
    case 3: return s > 0.2 ? 1.0 : 0.0;
    case 4: return s > 1.0 ? 1.0 : 0.0;
    case 5: return level_of(s, {-0.5, 0.3, 0.8, 1.3, 1.8}, 1.0);
    case 6: return std::min(42.0, std::floor(std::exp(1.0 + 0.9 * s)));
    case 7: return level_of(s, {-0.8, -0.2, 0.4, 0.9, 1.4, 2.0}, 0.0);
    default: return volume;
  }
}

}  // namespace

const std::vector<std::string> &standard_indicator_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const VariableSpec &s : standard_specs()) out.push_back(s.name);
    return out;
  }();
  return names;
}

void SyntheticConfig::validate() const {
  require(instances >= 3, ErrorCode::kInvalidConfig, "at least 3 instances required");
  require(vertices >= 5, ErrorCode::kInvalidConfig, "at least 5 vertices required");
  require(indicators >= 0 && indicators <= 9, ErrorCode::kInvalidConfig,
          "indicator count must be in [0, 9]");
  require(factors >= 1 && factors <= instances - 1, ErrorCode::kInvalidConfig,
          "factor count must be in [1, M - 1]");
  for (double v : {shape_strength, feature_strength, indicator_strength, noise, shape_noise_mm,
                   feature_noise})
    require(std::isfinite(v) && v >= 0.0, ErrorCode::kInvalidConfig,
            "strengths and noise levels must be finite and non-negative");
  require(indicator_strength <= 1.0, ErrorCode::kInvalidConfig,
          "indicator_strength must not exceed 1");
}

SyntheticCohort generate_cohort(const SyntheticConfig &config) {
  config.validate();
  const Index m = config.instances, n = config.vertices, k = config.indicators,
              f = config.factors;
  SyntheticCohort cohort;
  cohort.reference = uv_sphere(n);

  GroundTruth &truth = cohort.truth;
  {
    Rng rng(derive_seed(config.seed, kFactorStream));
    truth.factors.resize(f, m);
    for (Index j = 0; j < m; ++j)
      for (Index a = 0; a < f; ++a) truth.factors(a, j) = rng.normal();
  }
  {
    Rng rng(derive_seed(config.seed, kLoadingStream));
    truth.shape_loadings = unit_rows(rng, f, kBasisSize, 1.0);
    truth.feature_loadings = unit_rows(rng, f, kBasisSize, 1.0);
    truth.indicator_weights = unit_rows(rng, 9, f, config.indicator_strength).topRows(k);
  }

  // Per-vertex responses of the smooth basis, N x S.
  Eigen::MatrixXd phi(n, kBasisSize);
  for (Index v = 0; v < n; ++v) {
    const auto u = cohort.reference.vertices.row(v);
    phi.row(v) = smooth_basis(u(0), u(1), u(2)).transpose();
  }
  const Eigen::MatrixXd shape_fields = phi * truth.shape_loadings.transpose();      // N x F
  const Eigen::MatrixXd feature_fields = phi * truth.feature_loadings.transpose();  // N x F

  cohort.meshes.resize(static_cast<std::size_t>(m));
  cohort.features.resize(n, m);
  cohort.indicators.resize(k, m);
  truth.indicator_scores.resize(k, m);
  const double idio = std::sqrt(std::max(0.0, 1.0 - config.indicator_strength *
                                                        config.indicator_strength));
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < m; ++j) {
    const Eigen::VectorXd g = truth.factors.col(j);
    Rng shape_rng(derive_seed(config.seed, kShapeNoise, static_cast<std::uint64_t>(j)));
    Rng feature_rng(derive_seed(config.seed, kFeatureNoise, static_cast<std::uint64_t>(j)));
    Rng indicator_rng(derive_seed(config.seed, kIndicatorNoise, static_cast<std::uint64_t>(j)));

    const Eigen::VectorXd stretch = shape_fields * g;
    const Eigen::VectorXd drive = feature_fields * g;
    shape::Points points(n, 3);
    for (Index v = 0; v < n; ++v) {
      const double scale = 1.0 + config.shape_strength * stretch[v];
      for (int a = 0; a < 3; ++a)
        points(v, a) = kRadii[a] * cohort.reference.vertices(v, a) * scale +
                       config.noise * config.shape_noise_mm * shape_rng.normal();
      const double z = cohort.reference.vertices(v, 2);
      const double eta = std::log(2.0) - 2.0 * z * z + config.feature_strength * drive[v] +
                         config.noise * config.feature_noise * feature_rng.normal();
      cohort.features(v, j) = std::exp(eta);
    }
    cohort.meshes[static_cast<std::size_t>(j)] = std::move(points);

    const double volume = cohort.features.col(j).sum();
    for (Index a = 0; a < k; ++a) {
      const double s = truth.indicator_weights.row(a).dot(g) + config.noise * idio * indicator_rng.normal();
      truth.indicator_scores(a, j) = s;
      cohort.indicators(a, j) = indicator_value(static_cast<std::size_t>(a), s, volume);
    }
  }

  const std::vector<VariableSpec> all = standard_specs();
  cohort.spec.indicators.assign(all.begin(), all.begin() + k);
  if (k == 9) cohort.spec.volume_indicator = all[8].name;
  InstanceLayout &layout = cohort.layout;
  layout.vertex_count = n;
  layout.faces = cohort.reference.faces;
  layout.volume_indicator = cohort.spec.volume_indicator;
  for (const VariableSpec &s : cohort.spec.indicators) layout.indicator_names.push_back(s.name);
  cohort.specs = shape::expand_specs(cohort.spec, layout);

  const int width = std::max<int>(4, static_cast<int>(std::to_string(m - 1).size()));
  cohort.data.resize(layout.dimension(), m);
  for (Index j = 0; j < m; ++j) {
    std::string id = std::to_string(j);
    cohort.ids.push_back("s" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id);
    cohort.data.col(j) = shape::vectorize(cohort.meshes[static_cast<std::size_t>(j)],
                                          cohort.features.col(j), cohort.indicators.col(j), layout);
  }
  return cohort;
}

}  // namespace csm::synth

#include "csm/joint_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csm/error.hpp"
#include "csm/kernels.hpp"

namespace csm {

double BlockSigma::of(Block block) const {
  switch (block) {
    case Block::kCoordinate: return coordinate;
    case Block::kFeature: return feature;
    case Block::kIndicator: return indicator;
  }
  return indicator;
}

void BlockSigma::set(Block block, double sigma) {
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::kInvalidInput,
          "sigma must be finite and non-negative");
  switch (block) {
    case Block::kCoordinate: coordinate = sigma; break;
    case Block::kFeature: feature = sigma; break;
    case Block::kIndicator: indicator = sigma; break;
  }
}

JointModel::JointModel(InstanceLayout layout, std::vector<Marginal> marginals,
                       LatentGaussian latent, FitMetadata metadata, BlockSigma default_sigma)
    : layout_(std::move(layout)),
      marginals_(std::move(marginals)),
      latent_(std::move(latent)),
      metadata_(metadata),
      default_sigma_(default_sigma) {
  require(static_cast<Index>(marginals_.size()) == latent_.dimension() &&
              layout_.dimension() == latent_.dimension(),
          ErrorCode::kLayoutMismatch, "marginals, layout and latent dimension disagree");
}

Eigen::VectorXd JointModel::to_latent(const Eigen::VectorXd &instance) const {
  require(instance.size() == dimension(), ErrorCode::kLayoutMismatch,
          "instance length does not match model dimension");
  Eigen::VectorXd out(instance.size());
  for (Index i = 0; i < instance.size(); ++i) out[i] = marginal(i).to_latent(instance[i]);
  return out;
}

Eigen::VectorXd JointModel::from_latent(const Eigen::VectorXd &latent) const {
  require(latent.size() == dimension(), ErrorCode::kLayoutMismatch,
          "latent vector length does not match model dimension");
  Eigen::VectorXd out(latent.size());
  for (Index i = 0; i < latent.size(); ++i) out[i] = marginal(i).from_latent(latent[i]);
  return out;
}

Eigen::MatrixXd JointModel::from_latent_columns(const Eigen::MatrixXd &latent) const {
  require(latent.rows() == dimension(), ErrorCode::kLayoutMismatch,
          "latent matrix rows do not match model dimension");
  std::vector<Index> rows(static_cast<std::size_t>(dimension()));
  std::iota(rows.begin(), rows.end(), Index{0});
  Eigen::MatrixXd out;
  kernels::map_from_latent(latent, rows, marginals_, out);
  return out;
}

JointModel JointModel::with_default_sigma(BlockSigma sigma) const {
  JointModel copy = *this;
  copy.default_sigma_ = sigma;
  return copy;
}

std::vector<Marginal> fit_marginals(const Eigen::MatrixXd &data,
                                    std::span<const VariableSpec> specs) {
  require(static_cast<Index>(specs.size()) == data.rows(), ErrorCode::kInvalidInput,
          "one variable spec per data row required");
  const Index d = data.rows();
  std::vector<Marginal> marginals(static_cast<std::size_t>(d));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(d));
#pragma omp parallel for schedule(dynamic, 32)
  for (Index i = 0; i < d; ++i) {
    try {
      const Eigen::VectorXd row = data.row(i).transpose();
      marginals[i] = Marginal::fit({row.data(), static_cast<std::size_t>(row.size())}, specs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
  return marginals;
}

Eigen::MatrixXd build_latent_matrix(const Eigen::MatrixXd &data,
                                    std::span<const Marginal> marginals, std::uint64_t seed,
                                    int ranking_index) {
  require(static_cast<Index>(marginals.size()) == data.rows(), ErrorCode::kInvalidInput,
          "one marginal per data row required");
  std::vector<Index> rows(static_cast<std::size_t>(data.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  Eigen::MatrixXd out;
  kernels::normal_scores(data, rows, marginals, seed, static_cast<std::uint64_t>(ranking_index),
                         out);
  return out;
}

namespace {

bool has_ties(const Marginal &m) {
  return !m.is_gaussian() && !m.degenerate() && m.knot_values().size() < m.training_size();
}

// Leading `rank` eigenpairs of a symmetric matrix, descending, clamped >= 0.
void leading_eigenpairs(const Eigen::MatrixXd &sym, Index rank, Eigen::MatrixXd &vectors,
                        Eigen::VectorXd &values) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  require(solver.info() == Eigen::Success, ErrorCode::kInvalidInput,
          "eigendecomposition of the latent covariance failed");
  vectors = solver.eigenvectors().rightCols(rank).rowwise().reverse();
  values = solver.eigenvalues().tail(rank).reverse().cwiseMax(0.0);
  // Deterministic sign: largest-magnitude entry of each vector is positive.
  for (Index k = 0; k < rank; ++k) {
    Index arg = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, k) < 0.0) vectors.col(k) *= -1.0;
  }
}

}  // namespace

JointModel fit_joint_model(const Eigen::MatrixXd &data, std::vector<VariableSpec> specs,
                           InstanceLayout layout, const FitConfig &config) {
  const Index d = data.rows(), m = data.cols();
  require(d >= 1, ErrorCode::kInvalidInput, "data must have at least one row");
  require(m >= 3, ErrorCode::kInvalidInput, "at least 3 training instances required");
  require(data.allFinite(), ErrorCode::kInvalidInput, "training data must be finite");
  require(layout.dimension() == d, ErrorCode::kLayoutMismatch,
          "layout dimension does not match data rows");
  require(static_cast<Index>(specs.size()) == d, ErrorCode::kInvalidInput,
          "one variable spec per data row required");
  require(config.rankings >= 1, ErrorCode::kInvalidInput, "rankings must be >= 1");
  require(std::isfinite(config.jitter) && config.jitter >= 0.0, ErrorCode::kInvalidInput,
          "jitter must be finite and non-negative");
  const Index requested_rank = config.rank.value_or(m - 1);
  require(requested_rank >= 0 && requested_rank <= m - 1, ErrorCode::kInvalidRank,
          "rank " + std::to_string(requested_rank) + " exceeds M - 1 = " + std::to_string(m - 1));
  for (Index i = 0; i < d; ++i)
    require(specs[static_cast<std::size_t>(i)].block == layout.block_of(i),
            ErrorCode::kInvalidConfig,
            "variable '" + specs[static_cast<std::size_t>(i)].name + "' declared in block " +
                std::string(to_string(specs[static_cast<std::size_t>(i)].block)) +
                " but the layout places it in " + std::string(to_string(layout.block_of(i))));

  std::vector<Marginal> marginals = fit_marginals(data, specs);

  // Rows whose latent image does not depend on the ranking ("fixed") versus
  // rows with ties that are re-ranked for every ranking ("varying").
  std::vector<Index> fixed, varying;
  for (Index i = 0; i < d; ++i) (has_ties(marginals[i]) ? varying : fixed).push_back(i);
  const int rankings = varying.empty() ? 1 : config.rankings;
  const double inv_rankings = 1.0 / rankings;
  const double cov_scale = 1.0 / (static_cast<double>(m) - 1.0);

  Eigen::MatrixXd fixed_latent;
  kernels::normal_scores(data, fixed, marginals, config.seed, 0, fixed_latent);
  Eigen::VectorXd mean(d);
  const Eigen::VectorXd fixed_mean = fixed_latent.rowwise().mean();
  fixed_latent.colwise() -= fixed_mean;
  for (std::size_t k = 0; k < fixed.size(); ++k) mean[fixed[k]] = fixed_mean[static_cast<Index>(k)];

  const Index d_fixed = static_cast<Index>(fixed.size());
  const Index d_vary = static_cast<Index>(varying.size());
  const Index fixed_basis = std::min(d_fixed, m);
  const bool compressed = fixed_basis + d_vary < d;

  // The averaged covariance is P * C * P^T with P = blockdiag(Q, I), where Q
  // spans the fixed rows' centred columns; `reduced` holds C. Without
  // compression P is the identity and C is the full d x d covariance.
  Eigen::MatrixXd q_fixed;
  Eigen::MatrixXd fixed_coords;  // rows of C belonging to the fixed block, x M
  if (compressed) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(fixed_latent);
    q_fixed = qr.householderQ() * Eigen::MatrixXd::Identity(d_fixed, fixed_basis);
    fixed_coords.noalias() = q_fixed.transpose() * fixed_latent;
  } else {
    fixed_coords = fixed_latent;
  }
  const Index fixed_rows = fixed_coords.rows();
  const Index s = fixed_rows + d_vary;
  Eigen::MatrixXd reduced = Eigen::MatrixXd::Zero(s, s);
  {
    Eigen::MatrixXd top = Eigen::MatrixXd::Zero(fixed_rows, fixed_rows);
    kernels::accumulate_gram(fixed_coords, cov_scale, top);
    reduced.topLeftCorner(fixed_rows, fixed_rows) = top;
  }
  if (d_vary > 0) {
    Eigen::MatrixXd vary_gram = Eigen::MatrixXd::Zero(d_vary, d_vary);
    Eigen::MatrixXd vary_sum = Eigen::MatrixXd::Zero(d_vary, m);
    Eigen::VectorXd vary_mean = Eigen::VectorXd::Zero(d_vary);
    Eigen::MatrixXd z;
    for (int t = 0; t < rankings; ++t) {
      kernels::normal_scores(data, varying, marginals, config.seed, static_cast<std::uint64_t>(t),
                             z);
      const Eigen::VectorXd mu = z.rowwise().mean();
      z.colwise() -= mu;
      vary_mean += mu;
      vary_sum += z;
      kernels::accumulate_gram(z, cov_scale * inv_rankings, vary_gram);
    }
    reduced.bottomRightCorner(d_vary, d_vary) = vary_gram;
    const Eigen::MatrixXd cross =
        (cov_scale * inv_rankings) * (vary_sum * fixed_coords.transpose());
    reduced.bottomLeftCorner(d_vary, fixed_rows) = cross;
    reduced.topRightCorner(fixed_rows, d_vary) = cross.transpose();
    for (Index k = 0; k < d_vary; ++k) mean[varying[k]] = vary_mean[k] * inv_rankings;
  }

  const Index rank = std::min({requested_rank, d, s});
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
  leading_eigenpairs(reduced, rank, vectors, values);

  LatentGaussian latent;
  latent.mean = std::move(mean);
  latent.eigenvalues = std::move(values);
  latent.jitter = config.jitter;
  latent.basis.resize(d, rank);
  const Eigen::MatrixXd fixed_basis_rows =
      compressed ? Eigen::MatrixXd(q_fixed * vectors.topRows(fixed_rows))
                 : Eigen::MatrixXd(vectors.topRows(fixed_rows));
  for (Index k = 0; k < d_fixed; ++k) latent.basis.row(fixed[k]) = fixed_basis_rows.row(k);
  for (Index k = 0; k < d_vary; ++k) latent.basis.row(varying[k]) = vectors.row(fixed_rows + k);

  FitMetadata metadata{config.rankings, config.seed, m};
  return JointModel(std::move(layout), std::move(marginals), std::move(latent), metadata);
}

JointModel fit_joint_model(const Eigen::MatrixXd &data, std::vector<VariableSpec> specs,
                           const FitConfig &config) {
  std::vector<std::string> names;
  for (auto &spec : specs) {
    spec.block = Block::kIndicator;
    names.push_back(spec.name);
  }
  require(static_cast<Index>(specs.size()) == data.rows(), ErrorCode::kInvalidInput,
          "one variable spec per data row required");
  return fit_joint_model(data, std::move(specs), InstanceLayout::indicators_only(std::move(names)),
                         config);
}

Eigen::VectorXd principal_mode_latent(const JointModel &model, Index k, double t) {
  const LatentGaussian &latent = model.latent();
  require(k >= 1 && k <= latent.rank(), ErrorCode::kInvalidMode,
          "mode index " + std::to_string(k) + " outside [1, " + std::to_string(latent.rank()) + "]");
  require(std::isfinite(t), ErrorCode::kInvalidInput, "mode coefficient must be finite");
  return latent.mean + (t * std::sqrt(latent.eigenvalues[k - 1])) * latent.basis.col(k - 1);
}

Eigen::VectorXd principal_mode_instance(const JointModel &model, Index k, double t) {
  return model.from_latent(principal_mode_latent(model, k, t));
}

Eigen::VectorXd baseline_prediction(const JointModel &model) {
  return model.from_latent(model.latent().mean);
}

}  // namespace csm

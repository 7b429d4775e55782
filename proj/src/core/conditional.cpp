#include "csm/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csm/error.hpp"
#include "csm/kernels.hpp"
#include "csm/rng.hpp"

namespace csm {

namespace {

constexpr std::uint64_t kResidualStream = 0x6A09E667F3BCC909ULL;

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v *= -1.0;
}

}  // namespace

PosteriorSolver::PosteriorSolver(const LatentGaussian &prior, std::vector<Index> observed,
                                 std::vector<double> sigma, Index rank)
    : prior_(&prior), observed_(std::move(observed)) {
  const Index d = prior.dimension();
  const Index q = static_cast<Index>(observed_.size());
  require(q > 0, ErrorCode::kInvalidInput, "observation is empty");
  require(sigma.size() == observed_.size(), ErrorCode::kInvalidInput,
          "one sigma per observed component required");
  rank_ = rank < 0 ? prior.rank() : rank;
  require(rank_ <= prior.rank(), ErrorCode::kInvalidRank,
          "rank " + std::to_string(rank_) + " exceeds model rank " + std::to_string(prior.rank()));

  std::vector<Index> sorted = observed_;
  std::sort(sorted.begin(), sorted.end());
  require(sorted.front() >= 0 && sorted.back() < d, ErrorCode::kInvalidInput,
          "observed component index out of range");
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          ErrorCode::kInvalidInput, "observed component indices must be unique");

  sigma2_.resize(q);
  for (Index i = 0; i < q; ++i) {
    const double s = sigma[static_cast<std::size_t>(i)];
    require(std::isfinite(s) && s >= 0.0, ErrorCode::kInvalidInput,
            "observation sigma must be finite and non-negative");
    sigma2_[i] = s * s;
  }

  const double delta = prior.jitter;
  observed_loading_.resize(q, rank_);
  for (Index i = 0; i < q; ++i)
    observed_loading_.row(i) = prior.basis.row(observed_[static_cast<std::size_t>(i)]).head(rank_);
  observed_loading_ *= prior.eigenvalues.head(rank_).cwiseSqrt().asDiagonal();

  const Eigen::VectorXd noise = sigma2_.array() + delta;
  exact_ = (noise.array() <= 0.0).any();

  if (!exact_) {
    noise_inv_ = noise.cwiseInverse();
    kappa_ = delta * noise_inv_;
    keep_ = sigma2_.cwiseProduct(noise_inv_);
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(rank_, rank_);
    precision.selfadjointView<Eigen::Lower>().rankUpdate(
        observed_loading_.transpose() * noise_inv_.cwiseSqrt().asDiagonal());
    precision_.compute(precision);
    require(precision_.info() == Eigen::Success, ErrorCode::kSingularConditioning,
            "posterior precision is not positive definite");
    return;
  }

  // delta == 0 and some sigma == 0: solve with S_OO + diag(sigma^2) directly.
  Eigen::MatrixXd system = observed_loading_ * observed_loading_.transpose();
  system.diagonal() += noise;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  const double scale = std::max(system.diagonal().cwiseAbs().maxCoeff(), 1.0);
  const Eigen::VectorXd pivots = ldlt.vectorD();
  require(ldlt.info() == Eigen::Success && pivots.minCoeff() > 1e-12 * scale,
          ErrorCode::kSingularConditioning,
          "observed covariance is singular; use a positive jitter or observation sigma");
  gain_ = ldlt.solve(observed_loading_).transpose();
  inner_ = Eigen::MatrixXd::Identity(rank_, rank_) - gain_ * observed_loading_;
}

Eigen::MatrixXd PosteriorSolver::prior_loading() const {
  return prior_->basis.leftCols(rank_) * prior_->eigenvalues.head(rank_).cwiseSqrt().asDiagonal();
}

Eigen::MatrixXd PosteriorSolver::posterior_means(const Eigen::MatrixXd &z) const {
  const Index q = static_cast<Index>(observed_.size());
  require(z.rows() == q, ErrorCode::kInvalidInput, "observation vector has the wrong length");
  const LatentGaussian &prior = *prior_;
  Eigen::MatrixXd resid = z;
  for (Index i = 0; i < q; ++i) resid.row(i).array() -= prior.mean[observed_[i]];

  Eigen::MatrixXd out = prior.mean.replicate(1, z.cols());
  const Eigen::MatrixXd loading = prior.basis.leftCols(rank_);
  const Eigen::VectorXd root = prior.eigenvalues.head(rank_).cwiseSqrt();
  if (!exact_) {
    // xi | z has mean P^{-1} L_O^T N^{-1} r; y_i = mu_i + F_i xi + kappa_i r_i.
    const Eigen::MatrixXd xi = precision_.solve(observed_loading_.transpose() *
                                                (noise_inv_.asDiagonal() * resid));
    out.noalias() += loading * (root.asDiagonal() * xi);
    for (Index i = 0; i < q; ++i) {
      const Index c = observed_[i];
      // F scales observed rows by keep_i, i.e. subtracts kappa_i L_i xi.
      out.row(c) -= kappa_[i] * (observed_loading_.row(i) * xi);
      out.row(c) += kappa_[i] * resid.row(i);
    }
  } else {
    out.noalias() += loading * (root.asDiagonal() * (gain_ * resid));
  }
  // Noise-free entries reproduce the observation exactly (no rounding residue).
  for (Index i = 0; i < q; ++i)
    if (sigma2_[i] == 0.0) out.row(observed_[i]) = z.row(i);
  return out;
}

Eigen::VectorXd PosteriorSolver::posterior_mean(const Eigen::VectorXd &z) const {
  return posterior_means(z).col(0);
}

Eigen::MatrixXd PosteriorSolver::posterior_loading() const {
  Eigen::MatrixXd f = prior_loading();
  if (!exact_) {
    const Index q = static_cast<Index>(observed_.size());
    for (Index i = 0; i < q; ++i) f.row(observed_[i]) *= keep_[i];
    // P = C C^T, F P^{-1} F^T = (F C^{-T})(F C^{-T})^T.
    precision_.matrixU().solveInPlace<Eigen::OnTheRight>(f);
    return f;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(inner_);
  const Eigen::VectorXd values = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return f * (solver.eigenvectors() * values.asDiagonal());
}

Eigen::VectorXd PosteriorSolver::posterior_residual() const {
  Eigen::VectorXd residual = Eigen::VectorXd::Constant(prior_->dimension(), prior_->jitter);
  if (!exact_) {
    for (std::size_t i = 0; i < observed_.size(); ++i)
      residual[observed_[i]] = prior_->jitter * keep_[static_cast<Index>(i)];
  }
  return residual;
}

Eigen::VectorXd PosteriorSolver::posterior_variance() const {
  return posterior_loading().rowwise().squaredNorm() + posterior_residual();
}

ConditionalModel::ConditionalModel(const JointModel &model, Eigen::VectorXd mean,
                                   Eigen::MatrixXd loading, Eigen::VectorXd residual,
                                   std::vector<Index> observed)
    : prior_(&model),
      mean_(std::move(mean)),
      loading_(std::move(loading)),
      residual_(std::move(residual)),
      observed_(std::move(observed)) {
  const Index d = model.dimension();
  require(mean_.size() == d && loading_.rows() == d && residual_.size() == d,
          ErrorCode::kLayoutMismatch, "conditional model dimension mismatch");
}

ConditionalModel ConditionalModel::unconditional(const JointModel &model,
                                                 const ConditionOptions &options) {
  const LatentGaussian &latent = model.latent();
  const Index rank = options.rank < 0 ? latent.rank() : options.rank;
  require(rank <= latent.rank(), ErrorCode::kInvalidRank,
          "rank " + std::to_string(rank) + " exceeds model rank " + std::to_string(latent.rank()));
  Eigen::MatrixXd loading =
      latent.basis.leftCols(rank) * latent.eigenvalues.head(rank).cwiseSqrt().asDiagonal();
  return {model, latent.mean, std::move(loading),
          Eigen::VectorXd::Constant(latent.dimension(), latent.jitter), {}};
}

Eigen::VectorXd ConditionalModel::variance() const {
  return loading_.rowwise().squaredNorm() + residual_;
}

Eigen::MatrixXd ConditionalModel::dense_covariance() const {
  Eigen::MatrixXd cov = loading_ * loading_.transpose();
  cov.diagonal() += residual_;
  return cov;
}

Eigen::VectorXd ConditionalModel::predict() const { return prior_->from_latent(mean_); }

Eigen::MatrixXd ConditionalModel::sample_latent(Index n, std::uint64_t seed,
                                                std::span<const Index> rows) const {
  require(n >= 1, ErrorCode::kInvalidInput, "sample count must be >= 1");
  const Index d = mean_.size(), r = loading_.cols();
  std::vector<Index> all;
  if (rows.empty()) {
    all.resize(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), Index{0});
    rows = all;
  }
  const Index count = static_cast<Index>(rows.size());
  for (Index row : rows)
    require(row >= 0 && row < d, ErrorCode::kInvalidInput, "sample row out of range");

  Eigen::MatrixXd xi(r, n);
  const std::uint64_t residual_seed = derive_seed(seed, kResidualStream);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < r; ++k)
      xi(k, j) = counter_normal(seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k));

  Eigen::MatrixXd sub_loading(count, r);
  Eigen::VectorXd sub_mean(count), sub_root(count);
  for (Index i = 0; i < count; ++i) {
    sub_loading.row(i) = loading_.row(rows[i]);
    sub_mean[i] = mean_[rows[i]];
    sub_root[i] = std::sqrt(residual_[rows[i]]);
  }
  Eigen::MatrixXd out = sub_mean.replicate(1, n);
  if (r > 0) out.noalias() += sub_loading * xi;
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < count; ++i)
      if (sub_root[i] > 0.0)
        out(i, j) += sub_root[i] * counter_normal(residual_seed, static_cast<std::uint64_t>(j),
                                                   static_cast<std::uint64_t>(rows[i]));
  return out;
}

Eigen::MatrixXd ConditionalModel::sample(Index n, std::uint64_t seed,
                                         std::span<const Index> rows) const {
  std::vector<Index> all;
  if (rows.empty()) {
    all.resize(static_cast<std::size_t>(mean_.size()));
    std::iota(all.begin(), all.end(), Index{0});
    rows = all;
  }
  const Eigen::MatrixXd latent = sample_latent(n, seed, rows);
  Eigen::MatrixXd out;
  kernels::map_from_latent(latent, rows, prior_->marginals(), out);
  return out;
}

std::vector<Mode> ConditionalModel::modes(Index count) const {
  const Index r = loading_.cols();
  require(count >= 0 && count <= r, ErrorCode::kInvalidMode,
          "mode count " + std::to_string(count) + " outside [0, " + std::to_string(r) + "]");
  std::vector<Mode> out;
  if (count == 0) return out;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(r, r);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(loading_.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  require(solver.info() == Eigen::Success, ErrorCode::kInvalidInput,
          "eigendecomposition of the posterior covariance failed");
  for (Index k = 0; k < count; ++k) {
    const Index col = r - 1 - k;
    Mode mode;
    mode.eigenvalue = std::max(solver.eigenvalues()[col], 0.0);
    if (mode.eigenvalue > 0.0) {
      mode.direction = loading_ * solver.eigenvectors().col(col) / std::sqrt(mode.eigenvalue);
      mode.direction.normalize();
      normalize_sign(mode.direction);
    } else {
      mode.direction = Eigen::VectorXd::Zero(mean_.size());
    }
    out.push_back(std::move(mode));
  }
  return out;
}

Eigen::VectorXd ConditionalModel::mode_instance(Index k, double t) const {
  require(k >= 1 && k <= loading_.cols(), ErrorCode::kInvalidMode,
          "mode index " + std::to_string(k) + " outside [1, " + std::to_string(loading_.cols()) +
              "]");
  require(std::isfinite(t), ErrorCode::kInvalidInput, "mode coefficient must be finite");
  const Mode mode = modes(k).back();
  return prior_->from_latent(mean_ + (t * std::sqrt(mode.eigenvalue)) * mode.direction);
}

namespace {

struct PreparedObservation {
  std::vector<Index> components;
  std::vector<double> sigma;
  Eigen::VectorXd latent;
};

PreparedObservation prepare(const JointModel &model, const PartialObservation &observation) {
  require(!observation.empty(), ErrorCode::kInvalidInput, "observation is empty");
  PreparedObservation out;
  const Index q = static_cast<Index>(observation.entries.size());
  out.latent.resize(q);
  for (Index i = 0; i < q; ++i) {
    const ObservationEntry &e = observation.entries[static_cast<std::size_t>(i)];
    require(e.component >= 0 && e.component < model.dimension(), ErrorCode::kInvalidInput,
            "observed component index out of range");
    require(std::isfinite(e.value), ErrorCode::kInvalidInput, "observed value must be finite");
    out.components.push_back(e.component);
    out.sigma.push_back(e.sigma);
    out.latent[i] = model.marginal(e.component).to_latent(e.value);
  }
  return out;
}

}  // namespace

ConditionalModel condition(const JointModel &model, const PartialObservation &observation,
                           const ConditionOptions &options) {
  PreparedObservation prepared = prepare(model, observation);
  const PosteriorSolver solver(model.latent(), prepared.components, prepared.sigma, options.rank);
  Eigen::VectorXd mean = solver.posterior_mean(prepared.latent);
  return {model, std::move(mean), solver.posterior_loading(), solver.posterior_residual(),
          std::move(prepared.components)};
}

Eigen::VectorXd predict(const JointModel &model, const PartialObservation &observation,
                        const ConditionOptions &options) {
  PreparedObservation prepared = prepare(model, observation);
  const PosteriorSolver solver(model.latent(), prepared.components, prepared.sigma, options.rank);
  return model.from_latent(solver.posterior_mean(prepared.latent));
}

PartialObservation observe(const JointModel &model, const Eigen::VectorXd &instance,
                           std::span<const Index> components, std::optional<double> sigma) {
  require(instance.size() == model.dimension(), ErrorCode::kLayoutMismatch,
          "instance length does not match model dimension");
  PartialObservation obs;
  for (Index c : components) {
    require(c >= 0 && c < model.dimension(), ErrorCode::kInvalidInput,
            "observed component index out of range");
    obs.add(c, instance[c], sigma.value_or(model.default_sigma().of(model.layout().block_of(c))));
  }
  return obs;
}

}  // namespace csm

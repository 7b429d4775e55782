#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csm/joint_model.hpp"

namespace csm {

struct ObservationEntry {
  Index component = 0;
  double value = 0.0;  // data space
  double sigma = 0.0;  // latent-scale noise standard deviation
};

struct PartialObservation {
  std::vector<ObservationEntry> entries;

  void add(Index component, double value, double sigma) {
    entries.push_back({component, value, sigma});
  }
  bool empty() const { return entries.empty(); }
};

// Gaussian-process conditioning of the latent low-rank Gaussian on noisy
// observations of a fixed component set, prepared once and applied to any
// number of observed value vectors.
//
// With prior y = mu + L xi + sqrt(delta) eta, L = U diag(sqrt(lambda)), and
// observations z_O = y_O + eps, eps ~ N(0, diag(sigma^2)), the posterior is
//   Sigma_c = F P^{-1} F^T + diag(rho)
// where P = I + L_O^T N^{-1} L_O, N = diag(delta + sigma^2), F scales the
// observed rows of L by sigma^2 / (delta + sigma^2), and rho is delta on
// unobserved and delta sigma^2 / (delta + sigma^2) on observed components.
// This equals the textbook update mu + S_yO (S_OO + diag(sigma^2))^{-1} (z - mu_O)
// and S - S_yO (S_OO + diag(sigma^2))^{-1} S_Oy while only solving r x r systems.
// When delta + sigma_i^2 = 0 for some observed entry the q x q system
// S_OO + diag(sigma^2) is solved instead.
class PosteriorSolver {
 public:
  // `rank` < 0 uses every component of the prior; otherwise its leading `rank`.
  // Throws InvalidInput (empty / duplicate / out-of-range indices, bad sigma)
  // or SingularConditioning.
  PosteriorSolver(const LatentGaussian &prior, std::vector<Index> observed,
                  std::vector<double> sigma, Index rank = -1);

  Index rank() const { return rank_; }
  const std::vector<Index> &observed() const { return observed_; }

  // z: latent observations (q) -> posterior latent mean (d).
  Eigen::VectorXd posterior_mean(const Eigen::VectorXd &z) const;
  // Column-wise for q x n.
  Eigen::MatrixXd posterior_means(const Eigen::MatrixXd &z) const;

  // Sigma_c = loading * loading^T + diag(residual).
  Eigen::MatrixXd posterior_loading() const;
  Eigen::VectorXd posterior_residual() const;
  Eigen::VectorXd posterior_variance() const;

 private:
  Eigen::MatrixXd prior_loading() const;

  const LatentGaussian *prior_;
  Index rank_;
  std::vector<Index> observed_;
  Eigen::VectorXd sigma2_;
  bool exact_ = false;  // some delta + sigma^2 == 0: q x q path

  Eigen::MatrixXd observed_loading_;  // L_O, q x r
  Eigen::VectorXd noise_inv_;         // 1 / (delta + sigma^2)
  Eigen::VectorXd kappa_;             // delta / (delta + sigma^2)
  Eigen::VectorXd keep_;              // sigma^2 / (delta + sigma^2)
  Eigen::LLT<Eigen::MatrixXd> precision_;

  Eigen::MatrixXd gain_;   // exact path: L_O^T S^{-1}, r x q
  Eigen::MatrixXd inner_;  // exact path: I - L_O^T S^{-1} L_O
};

struct Mode {
  double eigenvalue = 0.0;
  Eigen::VectorXd direction;  // unit latent direction
};

struct ConditionOptions {
  Index rank = -1;  // prior rank truncation; < 0 keeps the full rank
};

// Posterior latent Gaussian Sigma_c = loading * loading^T + diag(residual)
// around a posterior mean, tied to the JointModel it was derived from. The
// JointModel must outlive it. Immutable.
class ConditionalModel {
 public:
  static ConditionalModel unconditional(const JointModel &model, const ConditionOptions & = {});

  ConditionalModel(const JointModel &model, Eigen::VectorXd mean, Eigen::MatrixXd loading,
                   Eigen::VectorXd residual, std::vector<Index> observed);

  const JointModel &prior() const { return *prior_; }
  const Eigen::VectorXd &mean() const { return mean_; }
  const Eigen::MatrixXd &loading() const { return loading_; }
  const Eigen::VectorXd &residual() const { return residual_; }
  const std::vector<Index> &observed() const { return observed_; }

  Eigen::VectorXd variance() const;
  Eigen::MatrixXd dense_covariance() const;

  // Posterior latent mean mapped through the marginals.
  Eigen::VectorXd predict() const;

  // Latent samples for the given rows (all rows when empty), rows x n.
  // Sample j depends only on (seed, j).
  Eigen::MatrixXd sample_latent(Index n, std::uint64_t seed,
                                std::span<const Index> rows = {}) const;
  // Data-space samples, rows x n.
  Eigen::MatrixXd sample(Index n, std::uint64_t seed, std::span<const Index> rows = {}) const;

  // Leading eigenpairs of loading * loading^T, descending.
  std::vector<Mode> modes(Index count) const;
  // from_latent(mean + t * sqrt(eigenvalue_k) * direction_k), k 1-based.
  Eigen::VectorXd mode_instance(Index k, double t) const;

 private:
  const JointModel *prior_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd loading_;
  Eigen::VectorXd residual_;
  std::vector<Index> observed_;
};

// Observed values are mapped to the latent space with the model's marginals.
// Throws InvalidInput (empty observation), InvalidLevel or SingularConditioning.
ConditionalModel condition(const JointModel &model, const PartialObservation &observation,
                           const ConditionOptions &options = {});

// Posterior mean prediction in data space.
Eigen::VectorXd predict(const JointModel &model, const PartialObservation &observation,
                        const ConditionOptions &options = {});

// Builds an observation of `components` of `instance` with the model's
// default per-block sigma (or `sigma` when given).
PartialObservation observe(const JointModel &model, const Eigen::VectorXd &instance,
                           std::span<const Index> components,
                           std::optional<double> sigma = std::nullopt);

}  // namespace csm

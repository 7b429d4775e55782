#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csm/latent_gaussian.hpp"
#include "csm/layout.hpp"
#include "csm/marginal.hpp"

namespace csm {

struct FitConfig {
  int rankings = 50;           // number of tie-randomized rankings T
  std::uint64_t seed = 42;
  std::optional<Index> rank = std::nullopt;  // defaults to M - 1
  double jitter = 1e-6;        // isotropic residual variance on the latent scale
};

struct FitMetadata {
  int rankings = 0;
  std::uint64_t seed = 0;
  Index training_size = 0;

  bool operator==(const FitMetadata &) const = default;
};

// Default observation noise (latent scale) per block, used when a partial
// observation does not specify sigma explicitly.
struct BlockSigma {
  double coordinate = 0.1;
  double feature = 0.1;
  double indicator = 0.01;

  double of(Block block) const;
  void set(Block block, double sigma);
  bool operator==(const BlockSigma &) const = default;
};

// Gaussian copula joint model: per-component marginals plus a low-rank latent
// Gaussian carrying the dependency structure. Immutable once built.
class JointModel {
 public:
  JointModel(InstanceLayout layout, std::vector<Marginal> marginals, LatentGaussian latent,
             FitMetadata metadata, BlockSigma default_sigma = {});

  const InstanceLayout &layout() const { return layout_; }
  const std::vector<Marginal> &marginals() const { return marginals_; }
  const Marginal &marginal(Index i) const { return marginals_[static_cast<std::size_t>(i)]; }
  const VariableSpec &spec(Index i) const { return marginal(i).spec(); }
  const LatentGaussian &latent() const { return latent_; }
  const FitMetadata &metadata() const { return metadata_; }
  const BlockSigma &default_sigma() const { return default_sigma_; }
  Index dimension() const { return latent_.dimension(); }
  Index rank() const { return latent_.rank(); }

  Eigen::VectorXd to_latent(const Eigen::VectorXd &instance) const;
  Eigen::VectorXd from_latent(const Eigen::VectorXd &latent) const;
  // Column-wise for d x n matrices.
  Eigen::MatrixXd from_latent_columns(const Eigen::MatrixXd &latent) const;

  JointModel with_default_sigma(BlockSigma sigma) const;

 private:
  InstanceLayout layout_;
  std::vector<Marginal> marginals_;
  LatentGaussian latent_;
  FitMetadata metadata_;
  BlockSigma default_sigma_;
};

// Fits every row of Y (d x M) with its spec.
std::vector<Marginal> fit_marginals(const Eigen::MatrixXd &data,
                                    std::span<const VariableSpec> specs);

// Latent training matrix for one tie-randomized ranking.
Eigen::MatrixXd build_latent_matrix(const Eigen::MatrixXd &data,
                                    std::span<const Marginal> marginals, std::uint64_t seed,
                                    int ranking_index);

// Fits marginals, averages the latent sample covariance over the configured
// number of tie-randomized rankings and keeps its leading eigenpairs.
// Throws InvalidInput (M < 3, non-finite data, shape mismatch) or InvalidRank.
JointModel fit_joint_model(const Eigen::MatrixXd &data, std::vector<VariableSpec> specs,
                           InstanceLayout layout, const FitConfig &config = {});

// Generic overload: every component is an indicator named by its spec.
JointModel fit_joint_model(const Eigen::MatrixXd &data, std::vector<VariableSpec> specs,
                           const FitConfig &config = {});

// from_latent(mean + t * sqrt(lambda_k) * u_k), k is 1-based. Throws InvalidMode.
Eigen::VectorXd principal_mode_latent(const JointModel &model, Index k, double t);
Eigen::VectorXd principal_mode_instance(const JointModel &model, Index k, double t);

// Prediction without observations: from_latent of the latent mean, i.e. the
// marginal medians for empirical marginals.
Eigen::VectorXd baseline_prediction(const JointModel &model);

}  // namespace csm

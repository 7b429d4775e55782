#pragma once

// Small fixtures and independent oracles shared by the unit tests.

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "csm/joint_model.hpp"

namespace testing {

using csm::Index;

// Mixed-kind indicator cohort: latent Gaussian factors pushed through
// thresholds and monotone maps, so every kind and plenty of ties appear.
struct MixedData {
  Eigen::MatrixXd data;  // d x M
  std::vector<csm::VariableSpec> specs;
};

inline MixedData mixed_data(Index m, std::uint64_t seed, int continuous = 3) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  const int d = continuous + 3;
  Eigen::MatrixXd latent(d, m);
  for (Index j = 0; j < m; ++j) {
    const double f = normal(gen);
    for (int i = 0; i < d; ++i) latent(i, j) = 0.7 * f + 0.7 * normal(gen);
  }
  MixedData out;
  out.data.resize(d, m);
  for (int i = 0; i < continuous; ++i) {
    out.specs.push_back({.name = "c" + std::to_string(i)});
    for (Index j = 0; j < m; ++j) out.data(i, j) = std::exp(latent(i, j)) + i;
  }
  out.specs.push_back({.name = "bin", .kind = csm::VariableKind::kBinary,
                       .level_labels = {"no", "yes"}});
  out.specs.push_back({.name = "ord", .kind = csm::VariableKind::kOrdinal,
                       .levels = {0, 1, 2, 3, 4}});
  out.specs.push_back({.name = "cnt", .kind = csm::VariableKind::kDiscrete});
  for (Index j = 0; j < m; ++j) {
    out.data(continuous, j) = latent(continuous, j) > 0.3 ? 1 : 0;
    const double o = latent(continuous + 1, j);
    out.data(continuous + 1, j) = o < -1 ? 0 : o < 0 ? 1 : o < 0.5 ? 2 : o < 1.2 ? 3 : 4;
    out.data(continuous + 2, j) = std::floor(std::exp(0.8 * latent(continuous + 2, j)));
  }
  return out;
}

// Random low-rank latent Gaussian with orthonormal basis.
inline csm::LatentGaussian random_latent(Index d, Index r, double jitter, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(d, r);
  for (Index i = 0; i < d; ++i)
    for (Index k = 0; k < r; ++k) a(i, k) = normal(gen);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  csm::LatentGaussian g;
  g.basis = qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
  g.eigenvalues.resize(r);
  double lambda = 3.0 + std::abs(normal(gen));
  for (Index k = 0; k < r; ++k) {
    g.eigenvalues[k] = lambda;
    lambda *= 0.4 + 0.5 * std::uniform_real_distribution<double>(0, 1)(gen);
  }
  g.mean.resize(d);
  for (Index i = 0; i < d; ++i) g.mean[i] = 0.3 * normal(gen);
  g.jitter = jitter;
  return g;
}

// Textbook Gaussian conditioning on the dense covariance:
//   mu_c = mu + S_yO (S_OO + D)^{-1} (z - mu_O)
//   S_c  = S - S_yO (S_OO + D)^{-1} S_Oy
struct DenseConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

inline DenseConditional dense_condition(const Eigen::VectorXd &mu, const Eigen::MatrixXd &s,
                                        const std::vector<Index> &obs,
                                        const std::vector<double> &sigma,
                                        const Eigen::VectorXd &z) {
  const Index q = static_cast<Index>(obs.size()), d = mu.size();
  Eigen::MatrixXd s_oo(q, q), s_yo(d, q);
  Eigen::VectorXd resid(q);
  for (Index a = 0; a < q; ++a) {
    resid[a] = z[a] - mu[obs[a]];
    s_yo.col(a) = s.col(obs[a]);
    for (Index b = 0; b < q; ++b) s_oo(a, b) = s(obs[a], obs[b]);
    s_oo(a, a) += sigma[a] * sigma[a];
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(s_oo);
  return {mu + s_yo * lu.solve(resid), s - s_yo * lu.solve(s_yo.transpose())};
}

// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / ("csm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

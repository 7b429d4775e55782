#include "csm/latent_gaussian.hpp"

#include <cmath>

#include "csm/error.hpp"

namespace csm {

void LatentGaussian::validate(double orthonormality_tolerance) const {
  const Index d = dimension(), r = rank();
  require(d >= 1, ErrorCode::kInvalidInput, "latent dimension must be positive");
  require(basis.rows() == d && basis.cols() == r, ErrorCode::kInvalidInput,
          "latent basis shape does not match dimension and rank");
  require(std::isfinite(jitter) && jitter >= 0.0, ErrorCode::kInvalidInput,
          "jitter must be finite and non-negative");
  require(mean.allFinite() && basis.allFinite() && eigenvalues.allFinite(),
          ErrorCode::kInvalidInput, "latent parameters must be finite");
  for (Index k = 0; k < r; ++k) {
    require(eigenvalues[k] >= 0.0, ErrorCode::kInvalidInput, "negative eigenvalue");
    require(k == 0 || eigenvalues[k - 1] >= eigenvalues[k], ErrorCode::kInvalidInput,
            "eigenvalues must be in descending order");
  }
  if (r > 0) {
    const Eigen::MatrixXd gram = basis.transpose() * basis;
    const double err = (gram - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
    require(err <= orthonormality_tolerance, ErrorCode::kInvalidInput,
            "latent basis columns are not orthonormal");
  }
}

LatentGaussian LatentGaussian::truncated(Index r) const {
  require(r >= 0 && r <= rank(), ErrorCode::kInvalidRank,
          "cannot truncate to rank " + std::to_string(r));
  return {mean, basis.leftCols(r), eigenvalues.head(r), jitter};
}

Eigen::VectorXd LatentGaussian::variance() const {
  Eigen::VectorXd var = Eigen::VectorXd::Constant(dimension(), jitter);
  var.noalias() += basis.cwiseAbs2() * eigenvalues;
  return var;
}

Eigen::MatrixXd LatentGaussian::dense_covariance() const {
  Eigen::MatrixXd cov = basis * eigenvalues.asDiagonal() * basis.transpose();
  cov.diagonal().array() += jitter;
  return cov;
}

}  // namespace csm

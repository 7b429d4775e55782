#pragma once

#include <Eigen/Dense>

namespace csm {

using Index = Eigen::Index;

// Low-rank zero-mean-centred Gaussian in the latent space:
//   covariance R = U diag(lambda) U^T + jitter * I
// with orthonormal U (d x r) and descending non-negative eigenvalues.
struct LatentGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
  double jitter = 0.0;

  Index dimension() const { return mean.size(); }
  Index rank() const { return eigenvalues.size(); }

  // Throws InvalidInput on shape, ordering, sign or orthonormality violations.
  void validate(double orthonormality_tolerance = 1e-10) const;

  // Keeps the leading `r` components.
  LatentGaussian truncated(Index r) const;

  Eigen::VectorXd variance() const;
  Eigen::MatrixXd dense_covariance() const;
};

}  // namespace csm

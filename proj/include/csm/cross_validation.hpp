#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "csm/joint_model.hpp"

namespace csm {

struct CrossValidationOptions {
  int folds = 3;
  std::uint64_t seed = 42;
  FitConfig fit;
};

struct SigmaScore {
  double sigma = 0.0;
  double error = 0.0;  // mean squared latent error on the unobserved components
};

struct BlockSelection {
  Block block = Block::kIndicator;
  double sigma = 0.0;
  std::vector<SigmaScore> scores;  // one per grid value, in grid order
};

struct SigmaSelection {
  BlockSigma sigma;  // selected values; blocks without a grid keep the defaults
  std::vector<BlockSelection> blocks;
};

// Log-spaced candidates per block; indicators get a finer low end because
// they are observed nearly noise-free.
std::map<Block, std::vector<double>> default_sigma_grid();

// Instance i goes to fold assignment[i]; a seeded shuffle of 0..M-1 dealt
// round-robin over the folds.
std::vector<int> fold_assignment(Index count, int folds, std::uint64_t seed);

// For each block with a grid: observe that block of every held-out instance
// with each candidate sigma, predict the rest from a model fitted on the other
// folds, and keep the sigma with the smallest mean squared error in the latent
// space (ties to the earlier grid entry). Throws InvalidInput when M < folds,
// folds < 2, a grid is empty or a block has nothing left to predict.
SigmaSelection cross_validate_sigma(const Eigen::MatrixXd &data,
                                    const std::vector<VariableSpec> &specs,
                                    const InstanceLayout &layout,
                                    const std::map<Block, std::vector<double>> &grids,
                                    const CrossValidationOptions &options = {});

}  // namespace csm

#include "csm/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csm/conditional.hpp"
#include "csm/error.hpp"
#include "csm/rng.hpp"

namespace csm {

std::map<Block, std::vector<double>> default_sigma_grid() {
  return {{Block::kCoordinate, {0.1, 0.3, 1.0, 3.0}},
          {Block::kFeature, {0.1, 0.3, 1.0, 3.0}},
          {Block::kIndicator, {0.01, 0.03, 0.1, 0.3, 1.0}}};
}

std::vector<int> fold_assignment(Index count, int folds, std::uint64_t seed) {
  require(folds >= 2, ErrorCode::kInvalidInput, "at least 2 folds required");
  require(count >= folds, ErrorCode::kInvalidInput,
          "fewer instances (" + std::to_string(count) + ") than folds (" +
              std::to_string(folds) + ")");
  std::vector<Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(derive_seed(seed, 0xC5));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<int> out(order.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    out[static_cast<std::size_t>(order[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return out;
}

namespace {

Eigen::MatrixXd take_columns(const Eigen::MatrixXd &data, const std::vector<Index> &cols) {
  Eigen::MatrixXd out(data.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = data.col(cols[j]);
  return out;
}

}  // namespace

SigmaSelection cross_validate_sigma(const Eigen::MatrixXd &data,
                                    const std::vector<VariableSpec> &specs,
                                    const InstanceLayout &layout,
                                    const std::map<Block, std::vector<double>> &grids,
                                    const CrossValidationOptions &options) {
  const Index m = data.cols(), d = data.rows();
  const std::vector<int> fold = fold_assignment(m, options.folds, options.seed);

  struct Task {
    Block block;
    std::vector<Index> observed, targets;
    std::vector<double> grid;
    std::vector<double> sq_error;
    Index count = 0;
  };
  std::vector<Task> tasks;
  for (const auto &[block, grid] : grids) {
    require(!grid.empty(), ErrorCode::kInvalidInput,
            "empty sigma grid for block " + std::string(to_string(block)));
    for (double s : grid)
      require(std::isfinite(s) && s >= 0.0, ErrorCode::kInvalidInput,
              "sigma grid values must be finite and non-negative");
    Task task{block, layout.block_indices(block), {}, grid, std::vector<double>(grid.size(), 0.0)};
    require(!task.observed.empty(), ErrorCode::kInvalidInput,
            "block " + std::string(to_string(block)) + " has no components");
    for (Index i = 0; i < d; ++i)
      if (layout.block_of(i) != block) task.targets.push_back(i);
    require(!task.targets.empty(), ErrorCode::kInvalidInput,
            "block " + std::string(to_string(block)) + " leaves nothing to predict");
    tasks.push_back(std::move(task));
  }

  for (int f = 0; f < options.folds; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < m; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const JointModel model =
        fit_joint_model(take_columns(data, train), specs, layout, options.fit);
    Eigen::MatrixXd truth(d, static_cast<Index>(test.size()));
    for (std::size_t j = 0; j < test.size(); ++j)
      truth.col(static_cast<Index>(j)) = model.to_latent(data.col(test[j]));

    for (Task &task : tasks) {
      Eigen::MatrixXd z(static_cast<Index>(task.observed.size()), truth.cols());
      for (std::size_t i = 0; i < task.observed.size(); ++i)
        z.row(static_cast<Index>(i)) = truth.row(task.observed[i]);
      for (std::size_t g = 0; g < task.grid.size(); ++g) {
        const PosteriorSolver solver(model.latent(), task.observed,
                                     std::vector<double>(task.observed.size(), task.grid[g]));
        const Eigen::MatrixXd mean = solver.posterior_means(z);
        double sq = 0.0;
        for (Index t : task.targets) sq += (mean.row(t) - truth.row(t)).squaredNorm();
        task.sq_error[g] += sq;
      }
      task.count += static_cast<Index>(task.targets.size()) * truth.cols();
    }
  }

  SigmaSelection out;
  for (const Task &task : tasks) {
    BlockSelection sel;
    sel.block = task.block;
    std::size_t best = 0;
    for (std::size_t g = 0; g < task.grid.size(); ++g) {
      sel.scores.push_back({task.grid[g], task.sq_error[g] / static_cast<double>(task.count)});
      if (sel.scores[g].error < sel.scores[best].error) best = g;
    }
    sel.sigma = task.grid[best];
    out.sigma.set(task.block, sel.sigma);
    out.blocks.push_back(std::move(sel));
  }
  return out;
}

}  // namespace csm

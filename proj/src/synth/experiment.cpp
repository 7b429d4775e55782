#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "csm/conditional.hpp"
#include "csm/error.hpp"
#include "csm/kernels.hpp"
#include "csm/rng.hpp"
#include "csm/stats.hpp"
#include "csm/synth.hpp"
#include "csm/text.hpp"

namespace csm::synth {

namespace {

constexpr std::uint64_t kSplitStream = 0x5B;

bool is_block_target(const std::string &target) {
  return target == "ventricles" || target == "wmh";
}

Block block_of_target(const std::string &target) {
  return target == "ventricles" ? Block::kCoordinate : Block::kFeature;
}

void check_target(const InstanceLayout &layout, const std::string &target) {
  if (is_block_target(target)) {
    require(layout.vertex_count > 0, ErrorCode::kInvalidTask,
            "target '" + target + "' needs a mesh block");
    return;
  }
  require(layout.indicator_index(target).has_value(), ErrorCode::kInvalidTask,
          "unknown target '" + target + "'");
}

std::vector<Index> target_components(const InstanceLayout &layout, const std::string &target) {
  if (is_block_target(target)) return layout.block_indices(block_of_target(target));
  return {layout.indicator(*layout.indicator_index(target))};
}

std::string metric_for(const std::string &target, const VariableSpec &spec) {
  if (target == "ventricles") return "vertex_distance_mm";
  if (target == "wmh") return "feature_abs_error";
  return spec.kind == VariableKind::kBinary ? "percent_correct" : "abs_error";
}

Eigen::MatrixXd take_columns(const Eigen::MatrixXd &data, const std::vector<Index> &cols) {
  Eigen::MatrixXd out(data.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = data.col(cols[j]);
  return out;
}

// Per-instance error of the predicted target rows against the truth.
std::vector<double> instance_errors(const std::string &metric, const InstanceLayout &layout,
                                    const Eigen::MatrixXd &predicted,
                                    const Eigen::MatrixXd &truth) {
  const Index n = predicted.cols();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    double e = 0.0;
    if (metric == "vertex_distance_mm") {
      for (Index v = 0; v < layout.vertex_count; ++v)
        e += (predicted.block(3 * v, j, 3, 1) - truth.block(3 * v, j, 3, 1)).norm();
      e /= static_cast<double>(layout.vertex_count);
    } else if (metric == "feature_abs_error") {
      e = (predicted.col(j) - truth.col(j)).cwiseAbs().mean();
    } else if (metric == "percent_correct") {
      e = predicted(0, j) == truth(0, j) ? 100.0 : 0.0;
    } else {
      e = std::abs(predicted(0, j) - truth(0, j));
    }
    out[static_cast<std::size_t>(j)] = e;
  }
  return out;
}

}  // namespace

std::vector<Index> observed_components(const InstanceLayout &layout, const std::string &target,
                                       const std::string &column) {
  check_target(layout, target);
  std::vector<Index> out;
  const std::vector<Index> own = target_components(layout, target);
  const auto keep = [&](Index c) { return std::find(own.begin(), own.end(), c) == own.end(); };
  const std::optional<Index> volume =
      layout.volume_indicator.empty() ? std::nullopt
                                      : layout.indicator_index(layout.volume_indicator);
  if (column == "mean") return out;
  if (column == "ventricles") return layout.block_indices(Block::kCoordinate);
  if (column == "wmh") return layout.block_indices(Block::kFeature);
  if (column == "indicators" || column == "ind+vol") {
    for (Index j = 0; j < layout.indicator_count(); ++j) {
      const Index c = layout.indicator(j);
      if (column == "indicators" && volume && j == *volume) continue;
      if (keep(c)) out.push_back(c);
    }
    return out;
  }
  if (column == "combined") {
    for (Index c = 0; c < layout.dimension(); ++c)
      if (keep(c)) out.push_back(c);
    return out;
  }
  fail(ErrorCode::kInvalidTask, "unknown observation column '" + column + "'");
}

const ReportRow *ExperimentReport::find(const std::string &target,
                                        const std::string &column) const {
  for (const ReportRow &row : rows)
    if (row.target == target && row.column == column) return &row;
  return nullptr;
}

std::string ExperimentReport::to_tsv() const {
  std::ostringstream out;
  const auto sig = [](double v) { return text::format_significant(v, 6); };
  out << "# reconstruction experiment\n"
      << "# train_size\t" << train_size << "\n"
      << "# validation_size\t" << validation_size << "\n"
      << "# seed\t" << seed << "\n"
      << "# sigma_coordinate\t" << sig(sigma.coordinate) << "\n"
      << "# sigma_feature\t" << sig(sigma.feature) << "\n"
      << "# sigma_indicator\t" << sig(sigma.indicator) << "\n"
      << "target\tmetric\tcolumn\tn\tmean\tstddev\tstderr\n";
  for (const ReportRow &r : rows)
    out << r.target << '\t' << r.metric << '\t' << r.column << '\t' << r.count << '\t'
        << sig(r.mean) << '\t' << sig(r.stddev) << '\t' << sig(r.stderr_) << '\n';
  return out.str();
}

std::string ExperimentReport::to_table() const {
  std::vector<std::string> targets;
  for (const ReportRow &r : rows)
    if (std::find(targets.begin(), targets.end(), r.target) == targets.end())
      targets.push_back(r.target);
  std::ostringstream out;
  out << "train " << train_size << ", validation " << validation_size << ", seed " << seed
      << ", sigma coordinate/feature/indicator " << text::format_significant(sigma.coordinate, 3)
      << "/" << text::format_significant(sigma.feature, 3) << "/"
      << text::format_significant(sigma.indicator, 3) << "\n";
  out << std::left << std::setw(14) << "target";
  for (const std::string &c : kColumns) out << std::setw(18) << c;
  out << "\n";
  for (const std::string &t : targets) {
    std::string label = t;
    if (const ReportRow *r = find(t, "mean"); r && r->higher_is_better()) label += " (%)";
    out << std::setw(14) << label;
    for (const std::string &c : kColumns) {
      const ReportRow *r = find(t, c);
      std::ostringstream cell;
      if (r)
        cell << std::fixed << std::setprecision(2) << r->mean << " +- " << r->stddev;
      else
        cell << "-";
      out << std::setw(18) << cell.str();
    }
    out << "\n";
  }
  return out.str();
}

ExperimentReport run_reconstruction_experiment(const Eigen::MatrixXd &data,
                                               const std::vector<VariableSpec> &specs,
                                               const InstanceLayout &layout,
                                               const ExperimentOptions &options) {
  const Index m = data.cols();
  for (const std::string &t : options.targets) check_target(layout, t);
  const Index train_size =
      options.train_size.value_or(std::llround(static_cast<double>(m) * 600.0 / 793.0));
  require(train_size >= 3 && train_size < m, ErrorCode::kInvalidInput,
          "training split must hold at least 3 instances and leave a validation set");

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(derive_seed(options.seed, kSplitStream));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<Index> train(order.begin(), order.begin() + train_size);
  std::vector<Index> validation(order.begin() + train_size, order.end());
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  const Eigen::MatrixXd train_data = take_columns(data, train);
  const Eigen::MatrixXd valid_data = take_columns(data, validation);

  ExperimentReport report;
  report.train_size = train_size;
  report.validation_size = static_cast<Index>(validation.size());
  report.seed = options.seed;
  report.sigma = options.sigma;
  if (options.cross_validate) {
    std::map<Block, std::vector<double>> grids;
    for (const auto &[block, grid] : options.sigma_grid)
      if (!layout.block_indices(block).empty()) grids[block] = grid;
    // A layout with a single non-empty block has nothing to cross-predict.
    if (grids.size() >= 2)
      report.sigma = cross_validate_sigma(train_data, specs, layout, grids,
                                          {options.folds, options.seed, options.fit})
                         .sigma;
  }

  const JointModel model = fit_joint_model(train_data, specs, layout, options.fit);
  Eigen::MatrixXd valid_latent(data.rows(), valid_data.cols());
  for (Index j = 0; j < valid_data.cols(); ++j)
    valid_latent.col(j) = model.to_latent(valid_data.col(j));
  const Eigen::VectorXd baseline = baseline_prediction(model);

  for (const std::string &target : options.targets) {
    const std::vector<Index> rows = target_components(layout, target);
    const std::string metric = metric_for(target, model.spec(rows.front()));
    Eigen::MatrixXd truth(static_cast<Index>(rows.size()), valid_data.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      truth.row(static_cast<Index>(i)) = valid_data.row(rows[i]);

    for (const std::string &column : kColumns) {
      const bool self = is_block_target(target) && column == target;
      if (self && !options.include_self) continue;
      Eigen::MatrixXd predicted(truth.rows(), truth.cols());
      if (column == "mean") {
        for (std::size_t i = 0; i < rows.size(); ++i)
          predicted.row(static_cast<Index>(i)).setConstant(baseline[rows[i]]);
      } else {
        const std::vector<Index> observed =
            self ? rows : observed_components(layout, target, column);
        require(!observed.empty(), ErrorCode::kInvalidTask,
                "column '" + column + "' observes nothing for target '" + target + "'");
        std::vector<double> sigma;
        for (Index c : observed) sigma.push_back(self ? 0.0 : report.sigma.of(layout.block_of(c)));
        Eigen::MatrixXd z(static_cast<Index>(observed.size()), valid_latent.cols());
        for (std::size_t i = 0; i < observed.size(); ++i)
          z.row(static_cast<Index>(i)) = valid_latent.row(observed[i]);
        const PosteriorSolver solver(model.latent(), observed, std::move(sigma));
        const Eigen::MatrixXd mean = solver.posterior_means(z);
        Eigen::MatrixXd latent_rows(truth.rows(), truth.cols());
        for (std::size_t i = 0; i < rows.size(); ++i)
          latent_rows.row(static_cast<Index>(i)) = mean.row(rows[i]);
        if (options.continuous_ordinal && model.spec(rows.front()).kind == VariableKind::kOrdinal) {
          for (Index i = 0; i < latent_rows.rows(); ++i)
            for (Index j = 0; j < latent_rows.cols(); ++j)
              predicted(i, j) = model.marginal(rows[static_cast<std::size_t>(i)])
                                    .from_latent_continuous(latent_rows(i, j));
        } else {
          kernels::map_from_latent(latent_rows, rows, model.marginals(), predicted);
        }
      }
      const std::vector<double> errors = instance_errors(metric, layout, predicted, truth);
      ReportRow row;
      row.target = target;
      row.metric = metric;
      row.column = column;
      row.count = static_cast<Index>(errors.size());
      row.mean = stats::mean(errors);
      row.stddev = stats::stddev(errors);
      row.stderr_ = row.stddev / std::sqrt(static_cast<double>(errors.size()));
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace csm::synth

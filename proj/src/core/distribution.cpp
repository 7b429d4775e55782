#include "csm/distribution.hpp"

#include <cmath>

#include "csm/error.hpp"
#include "csm/stats.hpp"

namespace csm {

std::vector<VariableHistogram> sample_distribution_report(const ConditionalModel &model,
                                                          const std::vector<std::string> &names,
                                                          Index n, std::size_t bins,
                                                          std::uint64_t seed) {
  const JointModel &prior = model.prior();
  const InstanceLayout &layout = prior.layout();
  std::vector<Index> rows;
  for (const std::string &name : names) {
    const auto c = layout.find_component(name);
    require(c.has_value(), ErrorCode::kInvalidTask, "unknown variable '" + name + "'");
    rows.push_back(*c);
  }
  std::vector<VariableHistogram> out;
  if (rows.empty()) return out;
  const Eigen::MatrixXd draws = model.sample(n, seed, rows);

  for (std::size_t v = 0; v < rows.size(); ++v) {
    const Marginal &marginal = prior.marginal(rows[v]);
    const VariableSpec &spec = marginal.spec();
    VariableHistogram h;
    h.name = names[v];
    h.component = rows[v];
    h.samples.resize(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) h.samples[static_cast<std::size_t>(j)] = draws(static_cast<Index>(v), j);

    const std::vector<double> levels = spec.admissible_levels();
    if (!spec.continuous() && !levels.empty()) {
      h.levels = true;
      h.edges = levels;
      h.mass = stats::level_histogram(h.samples, levels).mass;
    } else if (!spec.continuous()) {
      // Discrete without declared levels: the attained training values.
      h.levels = true;
      h.edges = marginal.knot_values();
      h.mass = stats::level_histogram(h.samples, h.edges).mass;
    } else {
      double lo = marginal.is_gaussian() ? marginal.mean() - 4.0 * marginal.stddev()
                                         : marginal.min_value();
      double hi = marginal.is_gaussian() ? marginal.mean() + 4.0 * marginal.stddev()
                                         : marginal.max_value();
      h.log_scale = !layout.volume_indicator.empty() && h.name == layout.volume_indicator &&
                    !marginal.is_gaussian() && lo > 0.0;
      if (h.log_scale) {
        for (double &s : h.samples) s = std::log(s);
        lo = std::log(lo);
        hi = std::log(hi);
      }
      const stats::Histogram hist = stats::histogram(h.samples, bins, lo, hi);
      h.mass = hist.mass;
      const std::size_t count = h.mass.size();
      for (std::size_t b = 0; b <= count; ++b)
        h.edges.push_back(count == 1 && b == 1 ? hi : lo + (hi - lo) * static_cast<double>(b) / count);
    }
    h.mean = stats::mean(h.samples);
    h.stddev = stats::stddev(h.samples);
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace csm

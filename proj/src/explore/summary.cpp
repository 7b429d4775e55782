#include <cmath>
#include <cstdio>

#include "csm/distribution.hpp"
#include "csm/error.hpp"
#include "csm/explore.hpp"
#include "csm/text.hpp"

namespace csm::explore {

namespace {

template <typename T>
T field(const Json &body, const char *key, T fallback) {
  if (!body.contains(key)) return fallback;
  try {
    return body.at(key).get<T>();
  } catch (const Json::exception &e) {
    fail(ErrorCode::kFormatError, std::string("field '") + key + "': " + e.what());
  }
}

Json vector_json(const Eigen::VectorXd &v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Json points_json(const Eigen::VectorXd &v, Index n) {
  Json out = Json::array();
  for (Index i = 0; i < n; ++i) out.push_back({v[3 * i], v[3 * i + 1], v[3 * i + 2]});
  return out;
}

Json histogram_json(const VariableHistogram &h) {
  return {{"name", h.name},   {"log_scale", h.log_scale}, {"levels", h.levels},
          {"edges", h.edges}, {"mass", h.mass},           {"mean", h.mean},
          {"stddev", h.stddev}};
}

std::vector<std::string> indicator_names(const JointModel &model) {
  return model.layout().indicator_names;
}

}  // namespace

ConditionRequest parse_condition_request(const Json &body) {
  require(body.is_object(), ErrorCode::kFormatError, "request body must be a JSON object");
  ConditionRequest req;
  if (body.contains("assignments")) {
    const Json &a = body.at("assignments");
    require(a.is_object(), ErrorCode::kFormatError, "'assignments' must be an object");
    for (const auto &[name, value] : a.items()) {
      if (value.is_number())
        req.assignments[name] = text::format_double(value.get<double>());
      else if (value.is_string())
        req.assignments[name] = value.get<std::string>();
      else
        fail(ErrorCode::kFormatError, "assignment '" + name + "' must be a number or a string");
    }
  }
  if (body.contains("sigma")) {
    const Json &s = body.at("sigma");
    require(s.is_object(), ErrorCode::kFormatError, "'sigma' must be an object");
    for (const auto &[block, value] : s.items()) {
      require(value.is_number(), ErrorCode::kFormatError, "sigma values must be numbers");
      const double sigma = value.get<double>();
      require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::kInvalidInput,
              "sigma must be finite and non-negative");
      req.sigma[parse_block(block)] = sigma;
    }
  }
  req.samples = field<Index>(body, "samples", req.samples);
  req.modes = field<Index>(body, "modes", req.modes);
  req.bins = field<std::size_t>(body, "bins", req.bins);
  req.seed = field<std::uint64_t>(body, "seed", req.seed);
  req.rank = field<Index>(body, "rank", req.rank);
  require(req.samples >= 1 && req.samples <= 100000, ErrorCode::kInvalidInput,
          "samples must be in [1, 100000]");
  require(req.modes >= 0, ErrorCode::kInvalidInput, "modes must be non-negative");
  require(req.bins >= 1 && req.bins <= 1000, ErrorCode::kInvalidInput, "bins must be in [1, 1000]");
  return req;
}

PartialObservation build_observation(const JointModel &model, const ConditionRequest &request) {
  BlockSigma sigma = model.default_sigma();
  for (const auto &[block, value] : request.sigma) sigma.set(block, value);
  PartialObservation obs;
  for (const auto &[name, raw] : request.assignments) {
    const auto c = model.layout().find_component(name);
    require(c.has_value(), ErrorCode::kInvalidLevel, "unknown variable '" + name + "'");
    const double value = model.spec(*c).parse_value(raw);
    obs.add(*c, value, sigma.of(model.layout().block_of(*c)));
  }
  return obs;
}

ConditionalModel build_conditional(const JointModel &model, const ConditionRequest &request) {
  const PartialObservation obs = build_observation(model, request);
  const ConditionOptions options{request.rank};
  if (obs.empty()) return ConditionalModel::unconditional(model, options);
  return condition(model, obs, options);
}

Json instance_json(const JointModel &model, const Eigen::VectorXd &instance) {
  const InstanceLayout &layout = model.layout();
  const Index n = layout.vertex_count;
  Json indicators = Json::object();
  for (Index j = 0; j < layout.indicator_count(); ++j)
    indicators[layout.indicator_names[static_cast<std::size_t>(j)]] = instance[layout.indicator(j)];
  return {{"vertices", points_json(instance, n)},
          {"features", vector_json(instance.segment(3 * n, n))},
          {"indicators", std::move(indicators)}};
}

Json model_meta(const JointModel &model) {
  const InstanceLayout &layout = model.layout();
  const Index n = layout.vertex_count;
  char checksum[17];
  std::snprintf(checksum, sizeof checksum, "%016llx",
                static_cast<unsigned long long>(layout.topology_checksum()));

  const auto block_summary = [&](const char *name, Block block) {
    Json j = {{"name", name}, {"block", to_string(block)}};
    const auto idx = layout.block_indices(block);
    j["count"] = idx.size();
    if (!idx.empty()) {
      const VariableSpec &spec = model.spec(idx.front());
      j["kind"] = to_string(spec.kind);
      j["marginal"] = to_string(spec.marginal);
      double lo = INFINITY, hi = -INFINITY;
      for (Index c : idx) {
        lo = std::min(lo, model.marginal(c).min_value());
        hi = std::max(hi, model.marginal(c).max_value());
      }
      j["min"] = lo;
      j["max"] = hi;
    }
    return j;
  };
  Json variables = Json::array();
  variables.push_back(block_summary("coordinates", Block::kCoordinate));
  variables.push_back(block_summary("features", Block::kFeature));
  for (Index j = 0; j < layout.indicator_count(); ++j) {
    const Marginal &m = model.marginal(layout.indicator(j));
    const VariableSpec &spec = m.spec();
    Json v = {{"name", spec.name},
              {"block", "indicator"},
              {"kind", to_string(spec.kind)},
              {"marginal", to_string(spec.marginal)}};
    if (!spec.continuous()) {
      v["levels"] = spec.admissible_levels().empty() ? m.knot_values() : spec.admissible_levels();
      if (!spec.level_labels.empty()) v["level_labels"] = spec.level_labels;
    }
    if (!m.is_gaussian()) {
      v["min"] = m.min_value();
      v["max"] = m.max_value();
      v["median"] = m.from_latent(0.0);
    } else {
      v["mean"] = m.mean();
      v["stddev"] = m.stddev();
    }
    v["volume"] = spec.name == layout.volume_indicator;
    variables.push_back(std::move(v));
  }
  return {{"N", n},
          {"K", layout.indicator_count()},
          {"d", layout.dimension()},
          {"M", model.metadata().training_size},
          {"rank", model.rank()},
          {"jitter", model.latent().jitter},
          {"rankings", model.metadata().rankings},
          {"topology_checksum", checksum},
          {"default_sigma",
           {{"coordinate", model.default_sigma().coordinate},
            {"feature", model.default_sigma().feature},
            {"indicator", model.default_sigma().indicator}}},
          {"variables", std::move(variables)},
          {"faces", layout.faces}};
}

Json condition_summary(const JointModel &model, const ConditionRequest &request) {
  const InstanceLayout &layout = model.layout();
  const Index n = layout.vertex_count;
  const PartialObservation obs = build_observation(model, request);
  const ConditionalModel cm = build_conditional(model, request);

  Json observed = Json::array();
  for (const ObservationEntry &e : obs.entries)
    observed.push_back({{"name", layout.component_name(e.component)},
                        {"value", e.value},
                        {"sigma", e.sigma}});

  const Eigen::VectorXd predicted = cm.predict();
  const Eigen::VectorXd sd = cm.variance().cwiseMax(0.0).cwiseSqrt();
  Json vertex_sd = Json::array();
  for (Index v = 0; v < n; ++v) vertex_sd.push_back(sd.segment(3 * v, 3).norm());
  Json indicator_sd = Json::object();
  for (Index j = 0; j < layout.indicator_count(); ++j)
    indicator_sd[layout.indicator_names[static_cast<std::size_t>(j)]] = sd[layout.indicator(j)];

  Json histograms = Json::array();
  for (const VariableHistogram &h : sample_distribution_report(
           cm, indicator_names(model), request.samples, request.bins, request.seed))
    histograms.push_back(histogram_json(h));

  Json modes = Json::array();
  const Index count = std::min(request.modes, cm.loading().cols());
  for (const Mode &mode : cm.modes(count)) {
    const Eigen::VectorXd shifted =
        model.from_latent(cm.mean() + std::sqrt(mode.eigenvalue) * mode.direction);
    const Eigen::VectorXd delta = shifted - predicted;
    modes.push_back({{"eigenvalue", mode.eigenvalue}, {"displacement", points_json(delta, n)}});
  }

  return {{"observed", std::move(observed)},
          {"rank", cm.loading().cols()},
          {"seed", request.seed},
          {"predicted", instance_json(model, predicted)},
          {"posterior_stddev",
           {{"vertices", std::move(vertex_sd)},
            {"features", vector_json(sd.segment(3 * n, n))},
            {"indicators", std::move(indicator_sd)}}},
          {"histograms", std::move(histograms)},
          {"modes", std::move(modes)}};
}

Json mode_response(const JointModel &model, const ConditionRequest &request, Index k, double t) {
  Eigen::VectorXd latent, center;
  double eigenvalue = 0.0;
  if (request.assignments.empty()) {
    const Index rank = request.rank < 0 ? model.rank() : request.rank;
    require(rank <= model.rank(), ErrorCode::kInvalidRank,
            "rank " + std::to_string(rank) + " exceeds model rank " + std::to_string(model.rank()));
    require(k >= 1 && k <= rank, ErrorCode::kInvalidMode,
            "mode index " + std::to_string(k) + " outside [1, " + std::to_string(rank) + "]");
    latent = principal_mode_latent(model, k, t);
    center = model.latent().mean;
    eigenvalue = model.latent().eigenvalues[k - 1];
  } else {
    const ConditionalModel cm = build_conditional(model, request);
    require(k >= 1 && k <= cm.loading().cols(), ErrorCode::kInvalidMode,
            "mode index " + std::to_string(k) + " outside [1, " +
                std::to_string(cm.loading().cols()) + "]");
    require(std::isfinite(t), ErrorCode::kInvalidInput, "mode coefficient must be finite");
    const Mode mode = cm.modes(k).back();
    center = cm.mean();
    latent = center + (t * std::sqrt(mode.eigenvalue)) * mode.direction;
    eigenvalue = mode.eigenvalue;
  }
  return {{"k", k},
          {"t", t},
          {"eigenvalue", eigenvalue},
          {"latent_displacement_norm", (latent - center).norm()},
          {"instance", instance_json(model, model.from_latent(latent))},
          {"latent", vector_json(latent)}};
}

Json sample_response(const JointModel &model, const ConditionRequest &request,
                     const std::vector<std::string> &names) {
  const std::vector<std::string> vars = names.empty() ? indicator_names(model) : names;
  std::vector<Index> rows;
  for (const std::string &name : vars) {
    const auto c = model.layout().find_component(name);
    require(c.has_value(), ErrorCode::kInvalidLevel, "unknown variable '" + name + "'");
    rows.push_back(*c);
  }
  const ConditionalModel cm = build_conditional(model, request);
  Json samples = Json::array();
  if (!rows.empty()) {
    const Eigen::MatrixXd draws = cm.sample(request.samples, request.seed, rows);
    for (Index j = 0; j < draws.cols(); ++j) samples.push_back(vector_json(draws.col(j)));
  }
  return {{"variables", vars}, {"seed", request.seed}, {"n", request.samples},
          {"samples", std::move(samples)}};
}

}  // namespace csm::explore

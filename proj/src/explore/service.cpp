// Eigen first: httplib pulls in <resolv.h>, whose _res macro collides with
// Eigen's parameter names.
#include "csm/error.hpp"
#include "csm/explore.hpp"
#include "csm/text.hpp"

#include "httplib.h"

namespace csm::explore {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidLevel:
    case ErrorCode::kInvalidInput:
    case ErrorCode::kInvalidRank:
    case ErrorCode::kInvalidMode:
    case ErrorCode::kInvalidTask:
    case ErrorCode::kLayoutMismatch:
      return 422;
    case ErrorCode::kSingularConditioning:
      return 409;
    default:
      return 400;
  }
}

namespace {

HttpResult error_result(ErrorCode code, const std::string &message) {
  Json body = {{"error", {{"class", error_class_name(code)}, {"message", message}}}};
  return {http_status(code), body.dump()};
}

Json parse_body(const std::string &body) {
  if (text::trim(body).empty()) return Json::object();
  try {
    return Json::parse(body);
  } catch (const Json::exception &e) {
    fail(ErrorCode::kFormatError, std::string("malformed JSON body: ") + e.what());
  }
}

// Query parameters override the body for the scalar knobs they name.
ConditionRequest request_from(const std::string &body,
                              const std::map<std::string, std::string> &query) {
  Json j = parse_body(body);
  require(j.is_object(), ErrorCode::kFormatError, "request body must be a JSON object");
  for (const char *key : {"rank", "seed", "samples", "modes", "bins"}) {
    const auto it = query.find(key);
    if (it == query.end()) continue;
    const auto v = text::parse_integer(it->second);
    require(v.has_value(), ErrorCode::kFormatError,
            std::string("query parameter '") + key + "' must be an integer");
    j[key] = *v;
  }
  return parse_condition_request(j);
}

template <typename F>
HttpResult guarded(F &&body) {
  try {
    return {200, body().dump()};
  } catch (const Error &e) {
    return error_result(e.code(), e.what());
  } catch (const Json::exception &e) {
    return error_result(ErrorCode::kFormatError, e.what());
  } catch (const std::exception &e) {
    return {500, Json{{"error", {{"class", "InternalError"}, {"message", e.what()}}}}.dump()};
  }
}

double query_double(const std::map<std::string, std::string> &query, const char *key,
                    std::optional<double> fallback) {
  const auto it = query.find(key);
  if (it == query.end()) {
    require(fallback.has_value(), ErrorCode::kFormatError,
            std::string("missing query parameter '") + key + "'");
    return *fallback;
  }
  const auto v = text::parse_double(it->second);
  require(v.has_value() && std::isfinite(*v), ErrorCode::kFormatError,
          std::string("query parameter '") + key + "' must be a number");
  return *v;
}

std::map<std::string, std::string> query_map(const httplib::Request &req) {
  std::map<std::string, std::string> out;
  for (const auto &[key, value] : req.params) out[key] = value;
  return out;
}

void reply(httplib::Response &res, const HttpResult &result) {
  res.status = result.status;
  res.set_content(result.body, "application/json");
}

}  // namespace

Service::Service(std::shared_ptr<const JointModel> model) : model_(std::move(model)) {
  require(model_ != nullptr, ErrorCode::kInvalidInput, "service needs a model");
}

HttpResult Service::meta() const {
  return guarded([&] { return model_meta(*model_); });
}

HttpResult Service::condition(const std::string &body,
                              const std::map<std::string, std::string> &query) const {
  return guarded([&] { return condition_summary(*model_, request_from(body, query)); });
}

HttpResult Service::mode(const std::string &body,
                         const std::map<std::string, std::string> &query) const {
  return guarded([&] {
    Json j = parse_body(body);
    const ConditionRequest req = request_from(body, query);
    const double k = query_double(query, "k", j.contains("k") ? std::optional(j["k"].get<double>())
                                                              : std::optional<double>(1.0));
    const double t = query_double(query, "t", j.contains("t") ? std::optional(j["t"].get<double>())
                                                              : std::optional<double>(0.0));
    require(k == std::floor(k), ErrorCode::kInvalidMode, "mode index must be an integer");
    return mode_response(*model_, req, static_cast<Index>(k), t);
  });
}

HttpResult Service::sample(const std::string &body,
                           const std::map<std::string, std::string> &query) const {
  return guarded([&] {
    Json j = parse_body(body);
    std::vector<std::string> names;
    if (j.is_object() && j.contains("variables"))
      names = j["variables"].get<std::vector<std::string>>();
    // "n" is accepted as the sample count here, mirroring the response field.
    auto q = query;
    if (const auto it = q.find("n"); it != q.end()) q.emplace("samples", it->second);
    if (j.is_object() && j.contains("n") && !j.contains("samples")) j["samples"] = j["n"];
    return sample_response(*model_, request_from(j.dump(), q), names);
  });
}

void Service::install(httplib::Server &server) const {
  server.Get("/model/meta", [this](const httplib::Request &, httplib::Response &res) {
    reply(res, meta());
  });
  server.Post("/condition", [this](const httplib::Request &req, httplib::Response &res) {
    reply(res, condition(req.body, query_map(req)));
  });
  server.Get("/mode", [this](const httplib::Request &req, httplib::Response &res) {
    reply(res, mode("", query_map(req)));
  });
  server.Post("/mode", [this](const httplib::Request &req, httplib::Response &res) {
    reply(res, mode(req.body, query_map(req)));
  });
  server.Post("/sample", [this](const httplib::Request &req, httplib::Response &res) {
    reply(res, sample(req.body, query_map(req)));
  });
}

}  // namespace csm::explore

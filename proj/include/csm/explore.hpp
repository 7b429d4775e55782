#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "csm/conditional.hpp"
#include "csm/error.hpp"

namespace httplib {
class Server;
}

namespace csm::explore {

using Json = nlohmann::ordered_json;

struct ConditionRequest {
  std::map<std::string, std::string> assignments;  // name -> number or level label
  std::map<Block, double> sigma;                   // overrides of the model defaults
  Index samples = 1000;                            // for histograms / sampling
  Index modes = 3;
  std::size_t bins = 20;
  std::uint64_t seed = 0;
  Index rank = -1;  // < 0: full model rank
};

// Throws FormatError on a malformed body.
ConditionRequest parse_condition_request(const Json &body);

// Unknown names and inadmissible values throw InvalidLevel.
PartialObservation build_observation(const JointModel &model, const ConditionRequest &request);
// Unconditional model when there are no assignments.
ConditionalModel build_conditional(const JointModel &model, const ConditionRequest &request);

// {"vertices": [[x, y, z], ...], "features": [...], "indicators": {name: value}}
Json instance_json(const JointModel &model, const Eigen::VectorXd &instance);

Json model_meta(const JointModel &model);
// Prediction, posterior stddev, indicator histograms and leading modes.
Json condition_summary(const JointModel &model, const ConditionRequest &request);
// Instance at mean + t sqrt(lambda_k) u_k of the prior (no assignments) or of
// the conditional model.
Json mode_response(const JointModel &model, const ConditionRequest &request, Index k, double t);
// `names` empty: all indicators.
Json sample_response(const JointModel &model, const ConditionRequest &request,
                     const std::vector<std::string> &names);

struct HttpResult {
  int status = 200;
  std::string body;
};

// HTTP front end over one immutable model. Handlers are pure functions of
// the request; the model is the only shared state.
class Service {
 public:
  explicit Service(std::shared_ptr<const JointModel> model);

  HttpResult meta() const;
  HttpResult condition(const std::string &body, const std::map<std::string, std::string> &query) const;
  HttpResult mode(const std::string &body, const std::map<std::string, std::string> &query) const;
  HttpResult sample(const std::string &body, const std::map<std::string, std::string> &query) const;

  void install(httplib::Server &server) const;

 private:
  std::shared_ptr<const JointModel> model_;
};

// Maps an Error class to its HTTP status: 422 inadmissible input, 409
// singular conditioning, 400 malformed requests.
int http_status(ErrorCode code);

}  // namespace csm::explore

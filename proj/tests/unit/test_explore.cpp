#include <atomic>
#include <thread>

#include "doctest.h"

#include "csm/explore.hpp"
#include "csm/synth.hpp"

// After Eigen: httplib defines a `_res` macro that collides with Eigen internals.
#include "httplib.h"

using namespace csm;
using namespace csm::explore;

namespace {

std::shared_ptr<const JointModel> small_model() {
  static const auto model = [] {
    synth::SyntheticConfig config;
    config.instances = 120;
    config.vertices = 30;
    const auto c = synth::generate_cohort(config);
    return std::make_shared<const JointModel>(fit_joint_model(c.data, c.specs, c.layout));
  }();
  return model;
}

Json parse(const HttpResult &r) { return Json::parse(r.body); }

}  // namespace

TEST_CASE("meta describes the model") {
  const Service service(small_model());
  const auto r = service.meta();
  REQUIRE(r.status == 200);
  const Json j = parse(r);
  CHECK(j["N"] == 30);
  CHECK(j["K"] == 9);
  CHECK(j["d"] == 129);
  CHECK(j["M"] == 120);
  CHECK(j["rank"] == 119);
  CHECK(j["topology_checksum"].get<std::string>().size() == 16);
  CHECK(j["faces"].size() == 56);
  REQUIRE(j["variables"].size() == 11);
  CHECK(j["variables"][0]["name"] == "coordinates");
  const Json &sex = j["variables"][3];
  CHECK(sex["name"] == "sex");
  CHECK(sex["kind"] == "binary");
  CHECK(j["variables"][10]["volume"] == true);
}

TEST_CASE("condition returns prediction, uncertainty, histograms and modes") {
  const Service service(small_model());
  const auto r = service.condition(R"({"assignments": {"age": 80, "sex": "male"},
                                       "samples": 300, "modes": 2, "seed": 5})",
                                   {});
  REQUIRE(r.status == 200);
  const Json j = parse(r);
  CHECK(j["observed"].size() == 2);
  CHECK(j["seed"] == 5);
  CHECK(j["predicted"]["vertices"].size() == 30);
  CHECK(j["predicted"]["indicators"]["sex"] == 1.0);
  CHECK(j["predicted"]["indicators"]["age"].get<double>() == doctest::Approx(80).epsilon(0.02));
  CHECK(j["posterior_stddev"]["indicators"]["sex"].get<double>() < 0.05);
  CHECK(j["posterior_stddev"]["indicators"]["mrs"].get<double>() > 0.3);
  CHECK(j["histograms"].size() == 9);
  for (const auto &h : j["histograms"]) {
    double total = 0;
    for (double m : h["mass"]) total += m;
    CHECK(total == doctest::Approx(1.0));
  }
  CHECK(j["modes"].size() == 2);
  CHECK(j["modes"][0]["eigenvalue"].get<double>() >= j["modes"][1]["eigenvalue"].get<double>());

  // Identical requests give identical bodies; query parameters override the body.
  CHECK(service.condition(R"({"assignments": {"age": 80, "sex": "male"}, "samples": 300,
                               "modes": 2, "seed": 5})", {}).body == r.body);
  const Json q = parse(service.condition(R"({"assignments": {"age": 80}, "seed": 5})",
                                         {{"seed", "9"}, {"rank", "10"}, {"samples", "50"}}));
  CHECK(q["seed"] == 9);
  CHECK(q["rank"] == 10);
}

TEST_CASE("errors map to status codes with a class and message") {
  const Service service(small_model());
  const auto unknown = service.condition(R"({"assignments": {"bmi": 3}})", {});
  CHECK(unknown.status == 422);
  CHECK(parse(unknown)["error"]["class"] == "InvalidLevel");
  const auto level = service.condition(R"({"assignments": {"mrs": 2.5}})", {});
  CHECK(level.status == 422);
  const auto malformed = service.condition("{", {});
  CHECK(malformed.status == 400);
  CHECK(parse(malformed)["error"]["class"] == "FormatError");
  const auto wrong_type = service.condition(R"({"assignments": [1]})", {});
  CHECK(wrong_type.status == 400);
  const auto rank = service.condition(R"({"assignments": {"age": 70}, "rank": 500})", {});
  CHECK(rank.status == 422);
  CHECK(parse(rank)["error"]["class"] == "InvalidRank");
  const auto mode = service.mode("", {{"k", "0"}});
  CHECK(mode.status == 422);
  CHECK(parse(mode)["error"]["class"] == "InvalidMode");
  CHECK(service.mode("", {{"k", "x"}}).status == 400);
  CHECK(http_status(ErrorCode::kSingularConditioning) == 409);
}

TEST_CASE("mode and sample endpoints") {
  const auto model = small_model();
  const Service service(model);
  const Json m = parse(service.mode("", {{"k", "1"}, {"t", "2"}}));
  CHECK(m["k"] == 1);
  CHECK(m["eigenvalue"].get<double>() == doctest::Approx(model->latent().eigenvalues[0]));
  CHECK(m["latent_displacement_norm"].get<double>() ==
        doctest::Approx(2 * std::sqrt(model->latent().eigenvalues[0])));
  const Json mc = parse(service.mode(R"({"assignments": {"age": 60}, "k": 2, "t": -1})", {}));
  CHECK(mc["k"] == 2);
  CHECK(mc["instance"]["indicators"]["age"].get<double>() == doctest::Approx(60).epsilon(0.05));

  const Json s = parse(service.sample(R"({"variables": ["age", "sex"], "n": 25, "seed": 3})", {}));
  CHECK(s["n"] == 25);
  REQUIRE(s["samples"].size() == 25);
  CHECK(s["samples"][0].size() == 2);
  const Json s2 = parse(service.sample(R"({"variables": ["age", "sex"], "seed": 3})", {{"n", "25"}}));
  CHECK(s2 == s);
}

TEST_CASE("real server answers concurrent requests consistently") {
  const Service service(small_model());
  httplib::Server server;
  service.install(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string body = R"({"assignments": {"age": 75, "mrs": 3}, "samples": 200, "seed": 1})";
  const std::string expect = service.condition(body, {}).body;
  std::atomic<int> ok{0};
  std::vector<std::thread> clients;
  for (int i = 0; i < 16; ++i) {
    clients.emplace_back([&, i] {
      httplib::Client client("127.0.0.1", port);
      client.set_read_timeout(60, 0);
      if (i % 4 == 3) {
        const auto r = client.Get("/model/meta");
        ok += r && r->status == 200;
      } else {
        const auto r = client.Post("/condition", body, "application/json");
        ok += r && r->status == 200 && r->body == expect;
      }
    });
  }
  for (auto &t : clients) t.join();
  CHECK(ok == 16);

  httplib::Client client("127.0.0.1", port);
  const auto bad = client.Post("/condition", R"({"assignments": {"sex": "alien"}})",
                               "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 422);
  const auto mode = client.Get("/mode?k=1&t=1");
  REQUIRE(mode);
  CHECK(mode->status == 200);
  CHECK(client.Get("/nothing")->status == 404);

  server.stop();
  listener.join();
}

#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "csm/error.hpp"
#include "csm/serialization.hpp"
#include "support.hpp"

using namespace csm;

namespace {

JointModel small_model() {
  auto mixed = testing::mixed_data(40, 5);
  mixed.specs[0].marginal = MarginalType::kGaussian;
  mixed.specs[3].level_labels = {"no", "yes"};
  return fit_joint_model(mixed.data, mixed.specs, {.rankings = 4, .seed = 8, .rank = 5})
      .with_default_sigma({0.2, 0.3, 0.05});
}

void check_same(const JointModel &a, const JointModel &b) {
  CHECK(a.layout() == b.layout());
  CHECK(a.metadata() == b.metadata());
  CHECK(a.default_sigma() == b.default_sigma());
  CHECK(a.latent().mean == b.latent().mean);
  CHECK(a.latent().basis == b.latent().basis);
  CHECK(a.latent().eigenvalues == b.latent().eigenvalues);
  CHECK(a.latent().jitter == b.latent().jitter);
  REQUIRE(a.marginals().size() == b.marginals().size());
  for (std::size_t i = 0; i < a.marginals().size(); ++i) {
    CHECK(a.marginals()[i].spec() == b.marginals()[i].spec());
    CHECK(a.marginals()[i].sorted_values() == b.marginals()[i].sorted_values());
    CHECK(a.marginals()[i].mean() == b.marginals()[i].mean());
    CHECK(a.marginals()[i].stddev() == b.marginals()[i].stddev());
  }
}

ErrorCode code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode::kUsage;
}

}  // namespace

TEST_CASE("text and binary forms round-trip exactly") {
  const JointModel model = small_model();
  const std::string text = to_text(model);
  const JointModel from_text = model_from_text(text);
  check_same(model, from_text);
  CHECK(to_text(from_text) == text);

  const auto bytes = to_binary(model);
  REQUIRE(bytes.size() > 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CSMB");
  check_same(model, model_from_binary(bytes));
  check_same(model, model_from_bytes(bytes));
  const std::vector<std::uint8_t> text_bytes(text.begin(), text.end());
  check_same(model, model_from_bytes(text_bytes));
  CHECK(bytes.size() < text.size());
}

TEST_CASE("files: format by extension, atomic writes") {
  const auto dir = testing::scratch_dir("serialization");
  const JointModel model = small_model();
  CHECK(format_for_path("a/b.csmb") == ModelFormat::kBinary);
  CHECK(format_for_path("a/b.json") == ModelFormat::kText);
  save_model(model, dir / "m.csmb");
  save_model(model, dir / "m.json");
  CHECK(read_file(dir / "m.csmb")[0] == 'C');
  CHECK(read_file(dir / "m.json")[0] == '{');
  check_same(model, load_model(dir / "m.csmb"));
  check_same(model, load_model(dir / "m.json"));
  // Saving twice gives identical bytes.
  save_model(model, dir / "again.csmb");
  CHECK(read_file(dir / "m.csmb") == read_file(dir / "again.csmb"));
  for (const auto &entry : std::filesystem::directory_iterator(dir))
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
  CHECK(code_of([&] { load_model(dir / "missing.json"); }) == ErrorCode::kIoError);
  CHECK(code_of([&] { save_model(model, dir / "no/such/dir/m.json"); }) == ErrorCode::kIoError);
}

TEST_CASE("malformed model files are FormatErrors") {
  const JointModel model = small_model();
  CHECK(code_of([] { model_from_text("{not json"); }) == ErrorCode::kFormatError);
  CHECK(code_of([] { model_from_text("{}"); }) == ErrorCode::kFormatError);

  auto j = nlohmann::json::parse(to_text(model));
  j["format_version"] = 99;
  CHECK(code_of([&] { model_from_json(j); }) == ErrorCode::kFormatError);

  j = nlohmann::json::parse(to_text(model));
  j["latent"]["eigenvalues"][0] = -1.0;
  CHECK(code_of([&] { model_from_json(j); }) == ErrorCode::kFormatError);

  auto bytes = to_binary(model);
  bytes.resize(bytes.size() / 2);
  CHECK(code_of([&] { model_from_binary(bytes); }) == ErrorCode::kFormatError);
  std::vector<std::uint8_t> wrong = {'C', 'S', 'M', 'X', 0};
  CHECK(code_of([&] { model_from_binary(wrong); }) == ErrorCode::kFormatError);
}

TEST_CASE("variable specs serialize with kinds, levels and labels") {
  const VariableSpec spec{.name = "mrs", .kind = VariableKind::kOrdinal,
                          .marginal = MarginalType::kEmpirical, .levels = {0, 1, 2},
                          .level_labels = {"none", "slight", "moderate"}};
  const auto j = to_json(spec);
  CHECK(j["kind"] == "ordinal");
  CHECK(spec_from_json(j) == spec);
  auto bad = j;
  bad["kind"] = "fuzzy";
  CHECK_THROWS_AS(spec_from_json(bad), Error);
}

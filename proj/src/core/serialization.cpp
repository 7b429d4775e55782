#include "csm/serialization.hpp"

#include <fstream>
#include <iterator>
#include <system_error>

#include <unistd.h>

#include "csm/error.hpp"

namespace csm {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "CSMB";

json vector_json(const Eigen::VectorXd &v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const json &j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

json marginal_json(const Marginal &m) {
  json j;
  j["spec"] = to_json(m.spec());
  j["type"] = to_string(m.type());
  if (m.is_gaussian()) {
    j["mean"] = m.mean();
    j["stddev"] = m.stddev();
  } else {
    j["sorted_values"] = m.sorted_values();
  }
  return j;
}

Marginal marginal_from(const json &j) {
  VariableSpec spec = spec_from_json(j.at("spec"));
  if (parse_marginal_type(j.at("type").get<std::string>()) == MarginalType::kGaussian)
    return Marginal::gaussian(std::move(spec), j.at("mean").get<double>(),
                              j.at("stddev").get<double>());
  return Marginal::empirical(std::move(spec), j.at("sorted_values").get<std::vector<double>>());
}

template <typename F>
auto guarded(F &&body) {
  try {
    return body();
  } catch (const json::exception &e) {
    fail(ErrorCode::kFormatError, std::string("malformed model: ") + e.what());
  }
}

}  // namespace

json to_json(const VariableSpec &spec) {
  json j;
  j["name"] = spec.name;
  j["kind"] = to_string(spec.kind);
  j["block"] = to_string(spec.block);
  j["marginal"] = to_string(spec.marginal);
  if (!spec.levels.empty()) j["levels"] = spec.levels;
  if (!spec.level_labels.empty()) j["level_labels"] = spec.level_labels;
  return j;
}

VariableSpec spec_from_json(const json &j) {
  return guarded([&] {
    require(j.is_object(), ErrorCode::kFormatError, "variable spec must be an object");
    VariableSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.kind = parse_kind(j.value("kind", std::string("continuous")));
    spec.block = parse_block(j.value("block", std::string("indicator")));
    spec.marginal = parse_marginal_type(j.value("marginal", std::string("empirical")));
    if (j.contains("levels")) spec.levels = j.at("levels").get<std::vector<double>>();
    if (j.contains("level_labels"))
      spec.level_labels = j.at("level_labels").get<std::vector<std::string>>();
    spec.validate();
    return spec;
  });
}

json to_json(const JointModel &model) {
  const InstanceLayout &layout = model.layout();
  const LatentGaussian &latent = model.latent();
  json j;
  j["format_version"] = kFormatVersion;
  j["layout"] = {{"vertex_count", layout.vertex_count},
                 {"indicator_names", layout.indicator_names},
                 {"faces", layout.faces},
                 {"volume_indicator", layout.volume_indicator}};
  j["fit"] = {{"rankings", model.metadata().rankings},
              {"seed", model.metadata().seed},
              {"training_size", model.metadata().training_size}};
  j["default_sigma"] = {{"coordinate", model.default_sigma().coordinate},
                        {"feature", model.default_sigma().feature},
                        {"indicator", model.default_sigma().indicator}};
  json marginals = json::array();
  for (const Marginal &m : model.marginals()) marginals.push_back(marginal_json(m));
  j["marginals"] = std::move(marginals);
  json basis = json::array();
  for (Index k = 0; k < latent.rank(); ++k) basis.push_back(vector_json(latent.basis.col(k)));
  j["latent"] = {{"dimension", latent.dimension()},
                 {"rank", latent.rank()},
                 {"jitter", latent.jitter},
                 {"mean", vector_json(latent.mean)},
                 {"eigenvalues", vector_json(latent.eigenvalues)},
                 {"basis", std::move(basis)}};
  return j;
}

JointModel model_from_json(const json &j) {
  return guarded([&] {
    require(j.is_object(), ErrorCode::kFormatError, "model must be a JSON object");
    const int version = j.at("format_version").get<int>();
    require(version == kFormatVersion, ErrorCode::kFormatError,
            "unsupported format_version " + std::to_string(version));
    const json &jl = j.at("layout");
    InstanceLayout layout;
    layout.vertex_count = jl.at("vertex_count").get<Index>();
    layout.indicator_names = jl.at("indicator_names").get<std::vector<std::string>>();
    layout.faces = jl.at("faces").get<std::vector<Face>>();
    layout.volume_indicator = jl.value("volume_indicator", std::string());

    std::vector<Marginal> marginals;
    for (const json &m : j.at("marginals")) marginals.push_back(marginal_from(m));

    const json &jg = j.at("latent");
    LatentGaussian latent;
    const Index d = jg.at("dimension").get<Index>(), r = jg.at("rank").get<Index>();
    latent.jitter = jg.at("jitter").get<double>();
    latent.mean = vector_from(jg.at("mean"));
    latent.eigenvalues = vector_from(jg.at("eigenvalues"));
    const json &jb = jg.at("basis");
    require(jb.is_array() && static_cast<Index>(jb.size()) == r && latent.mean.size() == d &&
                latent.eigenvalues.size() == r,
            ErrorCode::kFormatError, "latent section sizes are inconsistent");
    latent.basis.resize(d, r);
    for (Index k = 0; k < r; ++k) {
      const Eigen::VectorXd col = vector_from(jb[static_cast<std::size_t>(k)]);
      require(col.size() == d, ErrorCode::kFormatError, "basis column has the wrong length");
      latent.basis.col(k) = col;
    }
    try {
      latent.validate(1e-8);
    } catch (const Error &e) {
      fail(ErrorCode::kFormatError, std::string("invalid latent section: ") + e.what());
    }

    const json &jf = j.at("fit");
    FitMetadata meta{jf.at("rankings").get<int>(), jf.at("seed").get<std::uint64_t>(),
                     jf.at("training_size").get<Index>()};
    const json &js = j.at("default_sigma");
    BlockSigma sigma;
    sigma.set(Block::kCoordinate, js.at("coordinate").get<double>());
    sigma.set(Block::kFeature, js.at("feature").get<double>());
    sigma.set(Block::kIndicator, js.at("indicator").get<double>());
    require(static_cast<Index>(marginals.size()) == d && layout.dimension() == d,
            ErrorCode::kFormatError, "layout, marginals and latent dimension disagree");
    return JointModel(std::move(layout), std::move(marginals), std::move(latent), meta, sigma);
  });
}

std::string to_text(const JointModel &model) { return to_json(model).dump(1) + "\n"; }

std::vector<std::uint8_t> to_binary(const JointModel &model) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  json::to_bjdata(to_json(model), out, true, true);
  return out;
}

JointModel model_from_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    fail(ErrorCode::kFormatError, std::string("cannot parse model text: ") + e.what());
  }
  return model_from_json(j);
}

JointModel model_from_binary(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kMagic.size() &&
              std::equal(kMagic.begin(), kMagic.end(), bytes.begin()),
          ErrorCode::kFormatError, "missing binary model magic");
  json j;
  try {
    j = json::from_bjdata(bytes.begin() + static_cast<std::ptrdiff_t>(kMagic.size()), bytes.end());
  } catch (const json::exception &e) {
    fail(ErrorCode::kFormatError, std::string("cannot decode binary model: ") + e.what());
  }
  return model_from_json(j);
}

JointModel model_from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= kMagic.size() && std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    return model_from_binary(bytes);
  return model_from_text(
      std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()));
}

ModelFormat format_for_path(const std::filesystem::path &path) {
  return path.extension() == ".csmb" ? ModelFormat::kBinary : ModelFormat::kText;
}

JointModel load_model(const std::filesystem::path &path) { return model_from_bytes(read_file(path)); }

void save_model(const JointModel &model, const std::filesystem::path &path) {
  save_model(model, path, format_for_path(path));
}

void save_model(const JointModel &model, const std::filesystem::path &path, ModelFormat format) {
  if (format == ModelFormat::kBinary)
    write_file_atomic(path, std::span<const std::uint8_t>(to_binary(model)));
  else
    write_file_atomic(path, std::string_view(to_text(model)));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorCode::kIoError, "cannot read " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::kIoError, "cannot replace " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path &path, std::string_view text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

}  // namespace csm

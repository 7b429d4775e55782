#include <algorithm>
#include <exception>
#include <set>
#include <sstream>

#include "csm/error.hpp"
#include "csm/serialization.hpp"
#include "csm/shape.hpp"
#include "csm/text.hpp"

namespace csm::shape {

using nlohmann::json;

const std::string &IndicatorTable::field(const std::string &id, const std::string &column) const {
  const auto row = rows.find(id);
  require(row != rows.end(), ErrorCode::kMissingRecord, "no indicator row for id '" + id + "'");
  const auto col = std::find(columns.begin(), columns.end(), column);
  require(col != columns.end(), ErrorCode::kFormatError,
          "indicator table has no column '" + column + "'");
  return row->second[static_cast<std::size_t>(col - columns.begin())];
}

IndicatorTable parse_indicator_table(const std::string &content) {
  std::string_view body = content;
  if (body.starts_with("\xEF\xBB\xBF")) body.remove_prefix(3);
  const auto rows = text::lines(body);
  require(!rows.empty(), ErrorCode::kFormatError, "indicator table is empty");
  const char delim = rows[0].find('\t') != std::string_view::npos ? '\t' : ',';
  const auto header = text::split(rows[0], delim);
  require(text::trim(header[0]) == "id", ErrorCode::kFormatError,
          "first indicator column must be 'id'");
  IndicatorTable table;
  for (std::size_t k = 1; k < header.size(); ++k) {
    table.columns.emplace_back(text::trim(header[k]));
    require(!table.columns.back().empty(), ErrorCode::kFormatError, "empty column name");
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (text::trim(rows[i]).empty()) continue;
    const auto fields = text::split(rows[i], delim);
    require(fields.size() == header.size(), ErrorCode::kFormatError,
            "indicator row " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                " fields, header has " + std::to_string(header.size()));
    std::string id(text::trim(fields[0]));
    require(!id.empty(), ErrorCode::kFormatError, "empty id at row " + std::to_string(i + 1));
    std::vector<std::string> values;
    for (std::size_t k = 1; k < fields.size(); ++k) values.emplace_back(text::trim(fields[k]));
    require(table.rows.emplace(id, std::move(values)).second, ErrorCode::kFormatError,
            "duplicate id '" + id + "'");
  }
  return table;
}

IndicatorTable read_indicator_table(const std::filesystem::path &path) {
  const auto bytes = read_file(path);
  return parse_indicator_table(std::string(bytes.begin(), bytes.end()));
}

namespace {

VariableSpec template_from(const json &j, const char *name, Block block) {
  json copy = j;
  copy["name"] = name;
  copy["block"] = std::string(to_string(block));
  return spec_from_json(copy);
}

}  // namespace

CohortSpec parse_cohort_spec(const std::string &content) {
  json j;
  try {
    j = json::parse(content);
  } catch (const json::exception &e) {
    fail(ErrorCode::kFormatError, std::string("cannot parse spec file: ") + e.what());
  }
  require(j.is_object() && j.contains("indicators") && j["indicators"].is_array(),
          ErrorCode::kFormatError, "spec file needs an 'indicators' array");
  CohortSpec spec;
  if (j.contains("coordinates"))
    spec.coordinate = template_from(j["coordinates"], "coordinate", Block::kCoordinate);
  if (j.contains("features"))
    spec.feature = template_from(j["features"], "feature", Block::kFeature);
  std::set<std::string> names;
  for (const json &entry : j["indicators"]) {
    json copy = entry;
    copy["block"] = "indicator";
    spec.indicators.push_back(spec_from_json(copy));
    require(names.insert(spec.indicators.back().name).second, ErrorCode::kInvalidConfig,
            "duplicate indicator '" + spec.indicators.back().name + "'");
  }
  if (j.contains("volume_indicator")) {
    spec.volume_indicator = j["volume_indicator"].get<std::string>();
    require(names.count(spec.volume_indicator) == 1, ErrorCode::kInvalidConfig,
            "volume_indicator '" + spec.volume_indicator + "' is not a declared indicator");
  }
  return spec;
}

CohortSpec read_cohort_spec(const std::filesystem::path &path) {
  const auto bytes = read_file(path);
  return parse_cohort_spec(std::string(bytes.begin(), bytes.end()));
}

std::string format_cohort_spec(const CohortSpec &spec) {
  const auto strip = [](const VariableSpec &s) {
    json j = to_json(s);
    j.erase("name");
    j.erase("block");
    return j;
  };
  json j;
  j["coordinates"] = strip(spec.coordinate);
  j["features"] = strip(spec.feature);
  json indicators = json::array();
  for (const VariableSpec &s : spec.indicators) {
    json e = to_json(s);
    e.erase("block");
    indicators.push_back(std::move(e));
  }
  j["indicators"] = std::move(indicators);
  if (!spec.volume_indicator.empty()) j["volume_indicator"] = spec.volume_indicator;
  return j.dump(2) + "\n";
}

std::vector<VariableSpec> expand_specs(const CohortSpec &spec, const InstanceLayout &layout) {
  require(static_cast<Index>(spec.indicators.size()) == layout.indicator_count(),
          ErrorCode::kLayoutMismatch, "indicator specs do not match the layout");
  std::vector<VariableSpec> out;
  out.reserve(static_cast<std::size_t>(layout.dimension()));
  for (Index i = 0; i < layout.dimension(); ++i) {
    switch (layout.block_of(i)) {
      case Block::kCoordinate: out.push_back(spec.coordinate); break;
      case Block::kFeature: out.push_back(spec.feature); break;
      case Block::kIndicator:
        out.push_back(spec.indicators[static_cast<std::size_t>(i - 4 * layout.vertex_count)]);
        break;
    }
    out.back().name = layout.component_name(i);
    out.back().block = layout.block_of(i);
  }
  return out;
}

namespace {

struct MeshFile {
  std::string id;
  std::filesystem::path path;
};

std::vector<MeshFile> list_meshes(const std::filesystem::path &dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::kIoError,
          "mesh directory " + dir.string() + " does not exist");
  std::vector<MeshFile> out;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".csm" || ext == ".obj" || ext == ".ply")
      out.push_back({entry.path().stem().string(), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.size(); ++i)
    require(out[i].id != out[i - 1].id, ErrorCode::kFormatError,
            "two mesh files share the id '" + out[i].id + "'");
  require(!out.empty(), ErrorCode::kInvalidInput, "no mesh files in " + dir.string());
  return out;
}

}  // namespace

Cohort load_cohort(const std::filesystem::path &mesh_dir,
                   const std::filesystem::path &indicators_file, const CohortSpec &spec) {
  const std::vector<MeshFile> files = list_meshes(mesh_dir);
  const IndicatorTable table = read_indicator_table(indicators_file);
  const Index m = static_cast<Index>(files.size());

  std::vector<TriangleMesh> meshes(files.size());
  std::vector<FeatureField> features(files.size());
  std::vector<std::exception_ptr> errors(files.size());
#pragma omp parallel for schedule(dynamic)
  for (Index j = 0; j < m; ++j) {
    const MeshFile &file = files[static_cast<std::size_t>(j)];
    try {
      meshes[j] = read_mesh(file.path);
      const auto feat = mesh_dir / (file.id + ".feat");
      const auto vox = mesh_dir / (file.id + ".vox");
      if (std::filesystem::exists(feat))
        features[j] = read_feature_field(feat);
      else if (std::filesystem::exists(vox))
        features[j] = assign_voxels_to_vertices(read_points(vox), meshes[j]);
      else
        fail(ErrorCode::kMissingRecord, "no feature file (.feat or .vox) for '" + file.id + "'");
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);

  Cohort cohort;
  InstanceLayout &layout = cohort.layout;
  layout.vertex_count = meshes.front().vertex_count();
  layout.faces = meshes.front().faces;
  layout.volume_indicator = spec.volume_indicator;
  for (const VariableSpec &s : spec.indicators) layout.indicator_names.push_back(s.name);
  for (Index j = 0; j < m; ++j) {
    const std::string &id = files[static_cast<std::size_t>(j)].id;
    require(meshes[j].vertex_count() == layout.vertex_count, ErrorCode::kCorrespondenceError,
            "mesh '" + id + "' has " + std::to_string(meshes[j].vertex_count()) +
                " vertices, expected " + std::to_string(layout.vertex_count));
    require(meshes[j].faces == layout.faces, ErrorCode::kCorrespondenceError,
            "mesh '" + id + "' does not share the cohort face list");
    require(features[j].size() == layout.vertex_count, ErrorCode::kCorrespondenceError,
            "feature field of '" + id + "' has " + std::to_string(features[j].size()) +
                " values, expected " + std::to_string(layout.vertex_count));
  }

  cohort.specs = expand_specs(spec, layout);
  cohort.data.resize(layout.dimension(), m);
  for (Index j = 0; j < m; ++j) {
    const std::string &id = files[static_cast<std::size_t>(j)].id;
    require(table.rows.count(id) == 1, ErrorCode::kMissingRecord,
            "no indicator row for id '" + id + "'");
    Eigen::VectorXd indicators(layout.indicator_count());
    for (Index k = 0; k < layout.indicator_count(); ++k) {
      const VariableSpec &s = spec.indicators[static_cast<std::size_t>(k)];
      if (s.name == spec.volume_indicator) {
        indicators[k] = features[j].sum();
        continue;
      }
      const std::string &raw = table.field(id, s.name);
      require(!raw.empty(), ErrorCode::kMissingRecord,
              "missing value of '" + s.name + "' for id '" + id + "'");
      indicators[k] = s.parse_value(raw);
    }
    cohort.data.col(j) = vectorize(meshes[j], features[j], indicators, layout);
    cohort.ids.push_back(id);
  }
  return cohort;
}

void write_cohort(const std::filesystem::path &dir, const std::vector<std::string> &ids,
                  const Eigen::MatrixXd &data, const InstanceLayout &layout,
                  const CohortSpec &spec) {
  require(static_cast<Index>(ids.size()) == data.cols() && data.rows() == layout.dimension(),
          ErrorCode::kLayoutMismatch, "cohort data does not match ids and layout");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIoError, "cannot create " + dir.string());

  std::ostringstream table;
  table << "id";
  for (const VariableSpec &s : spec.indicators)
    if (s.name != spec.volume_indicator) table << '\t' << s.name;
  table << '\n';
  for (Index j = 0; j < data.cols(); ++j) {
    const std::string &id = ids[static_cast<std::size_t>(j)];
    const InstanceParts parts = devectorize(data.col(j), layout);
    TriangleMesh mesh{parts.vertices, layout.faces};
    write_file_atomic(dir / (id + ".csm"), std::string_view(format_csm1(mesh)));
    std::string feat;
    for (Index v = 0; v < parts.features.size(); ++v)
      feat += text::format_double(parts.features[v]) + "\n";
    write_file_atomic(dir / (id + ".feat"), std::string_view(feat));
    table << id;
    for (std::size_t k = 0; k < spec.indicators.size(); ++k) {
      const VariableSpec &s = spec.indicators[k];
      if (s.name == spec.volume_indicator) continue;
      const double v = parts.indicators[static_cast<Index>(k)];
      table << '\t' << s.label_for(v).value_or(text::format_double(v));
    }
    table << '\n';
  }
  write_file_atomic(dir / "indicators.tsv", std::string_view(table.str()));
  write_file_atomic(dir / "spec.json", std::string_view(format_cohort_spec(spec)));
}

}  // namespace csm::shape

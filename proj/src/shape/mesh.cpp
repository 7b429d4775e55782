#include <fstream>
#include <sstream>

#include "csm/error.hpp"
#include "csm/serialization.hpp"
#include "csm/shape.hpp"
#include "csm/text.hpp"

namespace csm::shape {

namespace {

[[noreturn]] void bad_line(std::string_view what, std::size_t line) {
  fail(ErrorCode::kFormatError, std::string(what) + " at line " + std::to_string(line));
}

double number(std::string_view field, std::size_t line) {
  const auto v = text::parse_double(field);
  if (!v || !std::isfinite(*v)) bad_line("invalid number '" + std::string(field) + "'", line);
  return *v;
}

Index integer(std::string_view field, std::size_t line) {
  const auto v = text::parse_integer(field);
  if (!v) bad_line("invalid integer '" + std::string(field) + "'", line);
  return static_cast<Index>(*v);
}

std::string slurp(const std::filesystem::path &path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

// Fan-triangulates a polygon.
void add_polygon(std::vector<Face> &faces, const std::vector<Index> &poly, std::size_t line) {
  if (poly.size() < 3) bad_line("polygon with fewer than 3 vertices", line);
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
}

TriangleMesh finish(std::vector<double> coords, std::vector<Face> faces) {
  TriangleMesh mesh;
  mesh.vertices = Eigen::Map<const Points>(coords.data(), static_cast<Index>(coords.size() / 3), 3);
  mesh.faces = std::move(faces);
  try {
    mesh.validate();
  } catch (const Error &e) {
    fail(ErrorCode::kFormatError, e.what());
  }
  return mesh;
}

}  // namespace

TriangleMesh parse_csm1(const std::string &content) {
  const auto rows = text::lines(content);
  require(!rows.empty(), ErrorCode::kFormatError, "empty mesh file");
  const auto header = text::split_whitespace(rows[0]);
  if (header.size() != 3 || header[0] != "CSM1") bad_line("expected 'CSM1 <N> <F>'", 1);
  const Index n = integer(header[1], 1), f = integer(header[2], 1);
  if (n < 0 || f < 0) bad_line("negative counts", 1);
  std::vector<double> coords;
  std::vector<Face> faces;
  coords.reserve(static_cast<std::size_t>(3 * n));
  std::size_t line = 1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    line = i + 1;
    const auto fields = text::split_whitespace(rows[i]);
    if (fields.empty()) continue;
    if (fields[0] == "v" && fields.size() == 4) {
      if (!faces.empty()) bad_line("vertex after faces", line);
      for (int a = 1; a <= 3; ++a) coords.push_back(number(fields[a], line));
    } else if (fields[0] == "f" && fields.size() == 4) {
      faces.push_back({integer(fields[1], line), integer(fields[2], line), integer(fields[3], line)});
    } else {
      bad_line("expected 'v x y z' or 'f i j k'", line);
    }
  }
  require(static_cast<Index>(coords.size()) == 3 * n && static_cast<Index>(faces.size()) == f,
          ErrorCode::kFormatError, "vertex or face count does not match the CSM1 header");
  return finish(std::move(coords), std::move(faces));
}

TriangleMesh parse_obj(const std::string &content) {
  std::vector<double> coords;
  std::vector<Face> faces;
  const auto rows = text::lines(content);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t line = i + 1;
    const auto fields = text::split_whitespace(rows[i]);
    if (fields.empty() || fields[0].front() == '#') continue;
    if (fields[0] == "v") {
      if (fields.size() < 4) bad_line("vertex needs 3 coordinates", line);
      for (int a = 1; a <= 3; ++a) coords.push_back(number(fields[a], line));
    } else if (fields[0] == "f") {
      std::vector<Index> poly;
      const Index count = static_cast<Index>(coords.size() / 3);
      for (std::size_t k = 1; k < fields.size(); ++k) {
        // "i", "i/t", "i//n" or "i/t/n"; 1-based, negative counts from the end.
        const Index v = integer(fields[k].substr(0, fields[k].find('/')), line);
        if (v == 0) bad_line("OBJ indices are 1-based", line);
        poly.push_back(v > 0 ? v - 1 : count + v);
      }
      add_polygon(faces, poly, line);
    }
    // Other statements (vn, vt, g, o, s, usemtl, ...) carry nothing we need.
  }
  return finish(std::move(coords), std::move(faces));
}

TriangleMesh parse_ply(const std::string &content) {
  const auto rows = text::lines(content);
  if (rows.empty() || text::trim(rows[0]) != "ply") bad_line("missing 'ply' magic", 1);
  Index vertex_count = -1, face_count = 0;
  std::vector<std::string> vertex_props;
  std::string current;
  std::size_t i = 1;
  for (; i < rows.size(); ++i) {
    const auto fields = text::split_whitespace(rows[i]);
    if (fields.empty()) continue;
    if (fields[0] == "format") {
      if (fields.size() < 2 || fields[1] != "ascii") bad_line("only ASCII PLY is supported", i + 1);
    } else if (fields[0] == "element" && fields.size() == 3) {
      current = std::string(fields[1]);
      if (current == "vertex") vertex_count = integer(fields[2], i + 1);
      else if (current == "face") face_count = integer(fields[2], i + 1);
      else bad_line("unsupported element '" + current + "'", i + 1);
    } else if (fields[0] == "property" && current == "vertex") {
      vertex_props.emplace_back(fields.back());
    } else if (fields[0] == "end_header") {
      ++i;
      break;
    }
  }
  const auto axis = [&](std::string_view name) {
    for (std::size_t k = 0; k < vertex_props.size(); ++k)
      if (vertex_props[k] == name) return k;
    fail(ErrorCode::kFormatError, "PLY vertex element lacks property " + std::string(name));
  };
  if (vertex_count < 0) bad_line("PLY header declares no vertex element", 1);
  const std::size_t ax = axis("x"), ay = axis("y"), az = axis("z");
  std::vector<double> coords;
  std::vector<Face> faces;
  for (Index v = 0; v < vertex_count; ++v, ++i) {
    if (i >= rows.size()) bad_line("truncated vertex list", i + 1);
    const auto fields = text::split_whitespace(rows[i]);
    if (fields.size() < vertex_props.size()) bad_line("short vertex row", i + 1);
    coords.push_back(number(fields[ax], i + 1));
    coords.push_back(number(fields[ay], i + 1));
    coords.push_back(number(fields[az], i + 1));
  }
  for (Index f = 0; f < face_count; ++f, ++i) {
    if (i >= rows.size()) bad_line("truncated face list", i + 1);
    const auto fields = text::split_whitespace(rows[i]);
    if (fields.empty()) bad_line("empty face row", i + 1);
    const Index k = integer(fields[0], i + 1);
    if (static_cast<Index>(fields.size()) < k + 1) bad_line("short face row", i + 1);
    std::vector<Index> poly;
    for (Index j = 1; j <= k; ++j) poly.push_back(integer(fields[static_cast<std::size_t>(j)], i + 1));
    add_polygon(faces, poly, i + 1);
  }
  return finish(std::move(coords), std::move(faces));
}

TriangleMesh read_mesh(const std::filesystem::path &path) {
  const std::string content = slurp(path);
  const std::string_view head = text::trim(std::string_view(content).substr(0, 16));
  try {
    if (head.starts_with("CSM1")) return parse_csm1(content);
    if (head.starts_with("ply")) return parse_ply(content);
    return parse_obj(content);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::kFormatError) throw;
    fail(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
}

std::string format_csm1(const TriangleMesh &mesh) {
  std::ostringstream out;
  out << "CSM1 " << mesh.vertex_count() << ' ' << mesh.faces.size() << '\n';
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    out << "v " << text::format_double(mesh.vertices(v, 0)) << ' '
        << text::format_double(mesh.vertices(v, 1)) << ' '
        << text::format_double(mesh.vertices(v, 2)) << '\n';
  for (const Face &f : mesh.faces) out << "f " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  return out.str();
}

Points read_points(const std::filesystem::path &path) {
  const std::string content = slurp(path);
  std::vector<double> coords;
  const auto rows = text::lines(content);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto body = text::trim(rows[i].substr(0, rows[i].find('#')));
    if (body.empty()) continue;
    const auto fields = text::split_whitespace(body);
    if (fields.size() != 3) bad_line(path.string() + ": expected 'x y z'", i + 1);
    for (const auto &f : fields) coords.push_back(number(f, i + 1));
  }
  return Eigen::Map<const Points>(coords.data(), static_cast<Index>(coords.size() / 3), 3);
}

FeatureField read_feature_field(const std::filesystem::path &path) {
  const std::string content = slurp(path);
  std::vector<double> values;
  const auto rows = text::lines(content);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto body = text::trim(rows[i]);
    if (body.empty()) continue;
    const double v = number(body, i + 1);
    if (v < 0.0) bad_line(path.string() + ": negative feature value", i + 1);
    values.push_back(v);
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace csm::shape

#include "csm/layout.hpp"

#include <charconv>

namespace csm {

InstanceLayout InstanceLayout::indicators_only(std::vector<std::string> names) {
  InstanceLayout layout;
  layout.indicator_names = std::move(names);
  return layout;
}

Block InstanceLayout::block_of(Index component) const {
  if (component < 3 * vertex_count) return Block::kCoordinate;
  if (component < 4 * vertex_count) return Block::kFeature;
  return Block::kIndicator;
}

std::vector<Index> InstanceLayout::block_indices(Block block) const {
  Index begin = 0, end = 0;
  switch (block) {
    case Block::kCoordinate: begin = 0, end = 3 * vertex_count; break;
    case Block::kFeature: begin = 3 * vertex_count, end = 4 * vertex_count; break;
    case Block::kIndicator: begin = 4 * vertex_count, end = dimension(); break;
  }
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(end - begin));
  for (Index i = begin; i < end; ++i) out.push_back(i);
  return out;
}

std::string InstanceLayout::component_name(Index component) const {
  static constexpr const char *kAxis[] = {".x", ".y", ".z"};
  switch (block_of(component)) {
    case Block::kCoordinate:
      return "v" + std::to_string(component / 3) + kAxis[component % 3];
    case Block::kFeature:
      return "f" + std::to_string(component - 3 * vertex_count);
    case Block::kIndicator:
      return indicator_names[static_cast<std::size_t>(component - 4 * vertex_count)];
  }
  return {};
}

namespace {

std::optional<Index> parse_index(std::string_view text) {
  Index value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

std::optional<Index> InstanceLayout::indicator_index(std::string_view name) const {
  for (std::size_t j = 0; j < indicator_names.size(); ++j)
    if (indicator_names[j] == name) return static_cast<Index>(j);
  return std::nullopt;
}

std::optional<Index> InstanceLayout::find_component(std::string_view name) const {
  if (auto j = indicator_index(name)) return indicator(*j);
  if (name.size() >= 2 && name[0] == 'f') {
    if (auto k = parse_index(name.substr(1)); k && *k >= 0 && *k < vertex_count) return feature(*k);
  }
  if (name.size() >= 4 && name[0] == 'v' && name[name.size() - 2] == '.') {
    const char axis = name.back();
    const int a = axis == 'x' ? 0 : axis == 'y' ? 1 : axis == 'z' ? 2 : -1;
    auto k = parse_index(name.substr(1, name.size() - 3));
    if (a >= 0 && k && *k >= 0 && *k < vertex_count) return coordinate(*k, a);
  }
  return std::nullopt;
}

std::uint64_t InstanceLayout::topology_checksum() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto feed = [&hash](std::uint64_t value) {
    for (int b = 0; b < 8; ++b) {
      hash ^= (value >> (8 * b)) & 0xFF;
      hash *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint64_t>(vertex_count));
  for (const Face &f : faces)
    for (Index v : f) feed(static_cast<std::uint64_t>(v));
  return hash;
}

}  // namespace csm

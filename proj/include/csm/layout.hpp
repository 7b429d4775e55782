#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csm/variable_spec.hpp"

namespace csm {

using Index = Eigen::Index;
using Face = std::array<Index, 3>;

// Position of every component in the instance vector
//   y = [x_1, y_1, z_1, ..., x_N, y_N, z_N, f_1, ..., f_N, a_1, ..., a_K]
// with d = 4N + K, plus the topology shared by all corresponded meshes.
struct InstanceLayout {
  Index vertex_count = 0;
  std::vector<std::string> indicator_names;
  std::vector<Face> faces;
  // Indicator holding the total feature volume (sum over vertices); empty if none.
  std::string volume_indicator;

  static InstanceLayout indicators_only(std::vector<std::string> names);

  Index indicator_count() const { return static_cast<Index>(indicator_names.size()); }
  Index dimension() const { return 4 * vertex_count + indicator_count(); }

  Index coordinate(Index vertex, int axis) const { return 3 * vertex + axis; }
  Index feature(Index vertex) const { return 3 * vertex_count + vertex; }
  Index indicator(Index j) const { return 4 * vertex_count + j; }

  Block block_of(Index component) const;
  std::vector<Index> block_indices(Block block) const;

  // "v12.x" / "f12" / indicator name.
  std::string component_name(Index component) const;
  std::optional<Index> find_component(std::string_view name) const;
  std::optional<Index> indicator_index(std::string_view name) const;

  // FNV-1a over the face list; identical topology gives identical checksums.
  std::uint64_t topology_checksum() const;

  bool operator==(const InstanceLayout &) const = default;
};

}  // namespace csm

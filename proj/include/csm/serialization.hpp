#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "csm/joint_model.hpp"

namespace csm {

inline constexpr int kFormatVersion = 1;

enum class ModelFormat { kText, kBinary };

nlohmann::json to_json(const VariableSpec &spec);
VariableSpec spec_from_json(const nlohmann::json &j);

nlohmann::json to_json(const JointModel &model);
JointModel model_from_json(const nlohmann::json &j);

// Canonical text form: indented JSON with shortest round-trip doubles.
std::string to_text(const JointModel &model);
// Compact form: "CSMB" magic followed by BJData with typed numeric arrays.
std::vector<std::uint8_t> to_binary(const JointModel &model);

// Throws FormatError on malformed input or an unsupported format_version.
JointModel model_from_text(std::string_view text);
JointModel model_from_binary(std::span<const std::uint8_t> bytes);
// Detects the form from the leading bytes.
JointModel model_from_bytes(std::span<const std::uint8_t> bytes);

// ".csmb" selects the binary form, anything else the text form.
ModelFormat format_for_path(const std::filesystem::path &path);

JointModel load_model(const std::filesystem::path &path);
void save_model(const JointModel &model, const std::filesystem::path &path);
void save_model(const JointModel &model, const std::filesystem::path &path, ModelFormat format);

// Whole-file helpers; writes go to a temporary sibling and are renamed into
// place. Throw IoError.
std::vector<std::uint8_t> read_file(const std::filesystem::path &path);
void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path &path, std::string_view text);

}  // namespace csm

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace csm::text {

// Shortest decimal that parses back to the same double.
std::string format_double(double value);
// printf("%.*g") with `digits` significant digits.
std::string format_significant(double value, int digits);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char delimiter);
// Splits on runs of spaces and tabs.
std::vector<std::string_view> split_whitespace(std::string_view text);
std::vector<std::string_view> lines(std::string_view text);

}  // namespace csm::text

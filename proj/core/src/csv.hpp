#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tbm::csv {

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',');

// Strict: the whole field must be consumed. "nan"/"inf" are accepted so the
// record validator can report them as NonFinite.
std::optional<double> parse_double(std::string_view field) noexcept;

// Shortest text that round-trips the exact double.
std::string format_double(double v);

}  // namespace tbm::csv

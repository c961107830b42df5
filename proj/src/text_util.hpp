#pragma once

// Line tokenizing shared by the text-format readers.

#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmaff/errors.hpp"

namespace cmaff::text {

// Whitespace-separated tokens with anything after '#' dropped.
inline std::vector<std::string_view> tokens(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double to_double(std::string_view tok, std::size_t line, const char* field) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, std::string("invalid ") + field + " '" + std::string(tok) + "'");
  }
  return v;
}

inline int to_int(std::string_view tok, std::size_t line, const char* field) {
  int v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, std::string("invalid ") + field + " '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace cmaff::text

#pragma once

// Small shared helpers for the line-oriented text formats: lossless double
// formatting (17 significant digits), strict parsing, and a tokenizer that
// tracks line numbers for error messages.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "corrlab/errors.hpp"

namespace corrlab::textio {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw config_error(where + ": expected a number, got '" + tok + "'");
  return v;
}

inline long long parse_int(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0')
    throw config_error(where + ": expected an integer, got '" + tok + "'");
  return v;
}

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
};

/// Reads all lines, splits on whitespace, drops blank lines and '#' comments.
inline std::vector<Line> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open file: " + path);
  std::vector<Line> out;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    Line line;
    line.number = number;
    std::string tok;
    while (ss >> tok) line.tokens.push_back(tok);
    if (!line.tokens.empty()) out.push_back(std::move(line));
  }
  return out;
}

inline std::string loc(const std::string& path, int line) {
  return path + ":" + std::to_string(line);
}

/// FNV-1a 64-bit over bytes; used for provenance digests of artifacts.
inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 1469598103934665603ull) {
  for (const char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace corrlab::textio

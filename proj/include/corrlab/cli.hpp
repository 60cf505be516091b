#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "corrlab/ergostats.hpp"
#include "corrlab/measures.hpp"

namespace corrlab {

inline constexpr const char* kVersion = "0.1.0";

// Key-value experiment description.  One key per line, '#' comments, values
// may span several whitespace-separated tokens (normalized to single
// spaces).  A run manifest parses as a config again: the 'manifest v1'
// header, the 'end' footer and every 'run.*' provenance key are skipped, so
// rerunning from a manifest reproduces the original artifacts byte for
// byte.  The seed is always materialized (default 0).
struct ExperimentConfig {
  std::string action;
  std::map<std::string, std::string> values;

  static ExperimentConfig from_file(const std::string& path);

  bool has(const std::string& key) const { return values.count(key) > 0; }
  // Required lookups name the action so error messages stay actionable.
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
};

struct RunArtifact {
  std::string path;
  std::uint64_t digest = 0;  // FNV-1a 64 of the file bytes as written
};

struct RunResult {
  std::vector<RunArtifact> artifacts;
  std::vector<std::string> notes;  // human-readable summary lines
  std::string manifest_path;
};

// Executes the configured action, writes its artifacts plus a manifest
// (config echo, library version, wall time, artifact digests), and returns
// what was written.  Errors keep the library taxonomy: config_error,
// numeric_error, cap_exceeded, each prefixed with the failing action.
RunResult run(const ExperimentConfig& config);

// Bounded test functions by textual spec:
//   const:<v>
//   stereo:<i1>,<i2>,<i3>         monomial in the embedding coordinates
//   fourier:<k>:re|im             Re/Im z^k / (1+|z|^2)^(k/2), 0 at infinity
//   indicator:annulus:<r1>:<r2>   1 on r1 < |z| <= r2
//   indicator:halfplane:re|im:<c> 1 on Re z > c (resp. Im z > c)
// Grammar violations raise config_error naming the offending position.
RealFn parse_function_spec(const std::string& spec);

struct RenderParams {
  int pixels = 512;
  bool auto_window = true;  // bounding box of the finite points + 5% margin
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
};

// Writes a square binary PGM (P5) with log-density shading of the cloud
// mass inside the window; deterministic for fixed input.  Returns warnings
// (empty window, points at infinity) rather than failing.
std::vector<std::string> render_cloud(const WeightedPointCloud& cloud,
                                      const RenderParams& params,
                                      const std::string& out_path);

}  // namespace corrlab

#include "corrlab/cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "corrlab/errors.hpp"
#include "corrlab/finite.hpp"
#include "textio.hpp"

namespace corrlab {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "correspondence", "matrix",  "measure", "cloud",      "out",
      "manifest",       "start",   "depth",   "samples",    "horizon",
      "cap",            "walks",   "seed",    "threads",    "retry_cap",
      "window_tol",     "phi",     "psi",     "functions",  "pixels",
      "window",         "set_a",   "set_b",
  };
  return keys;
}

const std::set<std::string>& known_actions() {
  static const std::set<std::string> actions = {
      "degrees",  "preimage",      "measure",      "correlate", "birkhoff",
      "mixing-report", "finite-check", "render",
  };
  return actions;
}

std::vector<std::string> split_tokens(const std::string& value) {
  std::istringstream ss(value);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : value) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

SpherePoint parse_point(const std::string& value) {
  const std::vector<std::string> toks = split_tokens(value);
  if (toks.size() == 1 && toks[0] == "inf") return SpherePoint::infinity();
  if (toks.size() != 2)
    throw config_error("start point must be '<re> <im>' or 'inf', got '" +
                       value + "'");
  return SpherePoint(textio::parse_double(toks[0], "start point"),
                     textio::parse_double(toks[1], "start point"));
}

std::string format_point(const SpherePoint& p) {
  if (p.at_infinity) return "inf";
  return textio::fmt_double(p.value.real()) + " " +
         textio::fmt_double(p.value.imag());
}

std::vector<int> parse_index_list(const std::string& value,
                                  const std::string& key) {
  std::vector<int> out;
  for (const std::string& piece : split_on(value, ',')) {
    if (piece.empty())
      throw config_error("config key '" + key + "': empty entry in '" +
                         value + "'");
    out.push_back(static_cast<int>(
        textio::parse_int(piece, "config key '" + key + "'")));
  }
  return out;
}

SampleParams sample_params(const ExperimentConfig& cfg) {
  SampleParams p;
  p.seed = static_cast<std::uint64_t>(cfg.get_int_or("seed", 0));
  p.threads = static_cast<int>(cfg.get_int_or("threads", 1));
  p.retry_cap = static_cast<int>(cfg.get_int_or("retry_cap", 5));
  if (p.threads < 1) throw config_error("threads must be at least 1");
  if (p.retry_cap < 0) throw config_error("retry_cap must be nonnegative");
  return p;
}

std::uint64_t digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw numeric_error("cannot read back artifact: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return textio::fnv1a64(buf.str());
}

void add_artifact(RunResult& result, const std::string& path) {
  result.artifacts.push_back(RunArtifact{path, digest_file(path)});
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open file for writing: " + path);
  out << body;
  if (!out) throw config_error("failed writing file: " + path);
}

std::string yesno(bool v) { return v ? "true" : "false"; }

// ---------------------------------------------------------------- actions

void run_degrees(const ExperimentConfig& cfg, RunResult& result) {
  const PolyCorrespondence corr =
      load_correspondence(cfg.get("correspondence"));
  result.notes.push_back("label = " + corr.label());
  result.notes.push_back("d = " + std::to_string(corr.topological_degree()));
  result.notes.push_back("d_f = " + std::to_string(corr.forward_degree()));
  for (const std::string& w : corr.warnings())
    result.notes.push_back("warning: " + w);
  if (cfg.has("out")) {
    std::ostringstream body;
    body << "degrees v1\n";
    body << "label " << corr.label() << "\n";
    body << "d " << corr.topological_degree() << "\n";
    body << "d_f " << corr.forward_degree() << "\n";
    for (const std::string& w : corr.warnings()) body << "warning " << w << "\n";
    body << "end\n";
    write_text(cfg.get("out"), body.str());
    add_artifact(result, cfg.get("out"));
  }
}

void run_preimage(const ExperimentConfig& cfg, RunResult& result) {
  const PolyCorrespondence corr =
      load_correspondence(cfg.get("correspondence"));
  const SpherePoint start = parse_point(cfg.get("start"));
  const int depth = static_cast<int>(cfg.get_int("depth"));
  const long long cap = cfg.get_int_or("cap", 1 << 20);
  if (cap < 1) throw config_error("cap must be positive");
  const WeightedPointCloud cloud = pullback_dirac_exact(
      corr, start, depth, static_cast<std::size_t>(cap));
  save_cloud(cfg.get("out"), cloud);
  add_artifact(result, cfg.get("out"));
  result.notes.push_back("points = " + std::to_string(cloud.size()));
}

void run_measure(const ExperimentConfig& cfg, RunResult& result) {
  const PolyCorrespondence corr =
      load_correspondence(cfg.get("correspondence"));
  const SpherePoint start = parse_point(cfg.get("start"));
  const int depth = static_cast<int>(cfg.get_int("depth"));
  const long long samples = cfg.get_int("samples");
  if (samples < 1) throw config_error("samples must be at least 1");
  const DsEstimate est = estimate_ds_measure(
      corr, start, depth, static_cast<std::size_t>(samples),
      sample_params(cfg));
  save_cloud(cfg.get("out"), est.cloud);
  add_artifact(result, cfg.get("out"));
  result.notes.push_back("points = " + std::to_string(est.cloud.size()));
  result.notes.push_back("invariance_residual = " +
                         textio::fmt_double(est.invariance_residual));
  for (const std::string& w : est.warnings)
    result.notes.push_back("warning: " + w);
}

ReportOptions report_options(const ExperimentConfig& cfg) {
  ReportOptions opt;
  const long long cap = cfg.get_int_or("cap", 1000000);
  const long long walks = cfg.get_int_or("walks", 256);
  if (cap < 1) throw config_error("cap must be positive");
  if (walks < 1) throw config_error("walks must be at least 1");
  opt.cap = static_cast<std::size_t>(cap);
  opt.walks = static_cast<int>(walks);
  opt.window_tol = cfg.get_double_or("window_tol", 0.0);
  opt.sample = sample_params(cfg);
  return opt;
}

void note_report(RunResult& result, const std::string& prefix,
                 const CorrelationReport& report) {
  result.notes.push_back(prefix + "target = " +
                         textio::fmt_double(report.target));
  result.notes.push_back(
      prefix + "final_cesaro_abs_dev = " +
      textio::fmt_double(report.cesaro_abs_devs.back()));
  if (report.density_zero_evaluated)
    result.notes.push_back(
        prefix + "density_zero_consistent = " +
        yesno(report.density_zero.weak_mixing_consistent));
  result.notes.push_back(
      prefix + "hierarchy_consistent = " +
      yesno(hierarchy_signatures_consistent(report, report.window_tol)));
}

void run_correlate(const ExperimentConfig& cfg, RunResult& result) {
  const PolyCorrespondence corr =
      load_correspondence(cfg.get("correspondence"));
  const WeightedPointCloud mu = load_cloud(cfg.get("measure"));
  const RealFn phi = parse_function_spec(cfg.get("phi"));
  const RealFn psi = parse_function_spec(cfg.get("psi"));
  const int horizon = static_cast<int>(cfg.get_int("horizon"));
  const CorrelationReport report = correlation_report(
      corr, mu, phi, psi, horizon, report_options(cfg));
  save_report(cfg.get("out"), report);
  add_artifact(result, cfg.get("out"));
  note_report(result, "", report);
}

void run_birkhoff(const ExperimentConfig& cfg, RunResult& result) {
  const PolyCorrespondence corr =
      load_correspondence(cfg.get("correspondence"));
  const RealFn phi = parse_function_spec(cfg.get("phi"));
  const SpherePoint start = parse_point(cfg.get("start"));
  const int n = static_cast<int>(cfg.get_int("horizon"));
  KoopmanOptions opt;
  const ReportOptions shared = report_options(cfg);
  opt.cap = shared.cap;
  opt.walks = shared.walks;
  opt.sample = shared.sample;
  const std::vector<double> partials =
      birkhoff_average(corr, phi, start, n, opt);
  std::ostringstream body;
  body << "birkhoff v1\n";
  body << "label " << corr.label() << "\n";
  body << "spec " << cfg.get("phi") << "\n";
  body << "start " << format_point(start) << "\n";
  body << "horizon " << n << "\n";
  for (std::size_t k = 0; k < partials.size(); ++k)
    body << "partial " << (k + 1) << " " << textio::fmt_double(partials[k])
         << "\n";
  body << "end\n";
  write_text(cfg.get("out"), body.str());
  add_artifact(result, cfg.get("out"));
  result.notes.push_back("final_average = " +
                         textio::fmt_double(partials.back()));
}

void run_mixing_report(const ExperimentConfig& cfg, RunResult& result) {
  const PolyCorrespondence corr =
      load_correspondence(cfg.get("correspondence"));
  const WeightedPointCloud mu = load_cloud(cfg.get("measure"));
  const int horizon = static_cast<int>(cfg.get_int("horizon"));
  const std::string specs_joined = cfg.get_or(
      "functions", "fourier:1:re;fourier:1:im;fourier:2:re;stereo:0,0,1");
  const std::vector<std::string> specs = split_on(specs_joined, ';');
  const ReportOptions base = report_options(cfg);
  const std::string out = cfg.get("out");

  std::ostringstream body;
  body << "mixing-report v1\n";
  body << "label " << corr.label() << "\n";
  body << "horizon " << horizon << "\n";
  body << "functions " << specs.size() << "\n";
  int consistent_count = 0;
  int dz_count = 0;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const RealFn f = parse_function_spec(specs[k]);
    // Per-function sub-seed; derived from the config seed so the manifest
    // alone still reproduces the run.
    ReportOptions opt = base;
    opt.sample.seed = base.sample.seed + k;
    const CorrelationReport report =
        correlation_report(corr, mu, f, f, horizon, opt);
    const std::string report_path = out + "." + std::to_string(k) + ".report";
    save_report(report_path, report);
    add_artifact(result, report_path);

    const bool hier =
        hierarchy_signatures_consistent(report, report.window_tol);
    body << "fn " << k << " spec " << specs[k] << "\n";
    body << "fn " << k << " target " << textio::fmt_double(report.target)
         << "\n";
    body << "fn " << k << " final_abs_dev "
         << textio::fmt_double(report.cesaro_abs_devs.back()) << "\n";
    body << "fn " << k << " density_zero "
         << (report.density_zero_evaluated
                 ? (report.density_zero.weak_mixing_consistent
                        ? "consistent"
                        : "inconsistent")
                 : "not-evaluated")
         << "\n";
    body << "fn " << k << " hierarchy " << (hier ? 1 : 0) << "\n";
    body << "fn " << k << " report " << report_path << "\n";
    if (hier) ++consistent_count;
    if (report.density_zero_evaluated &&
        report.density_zero.weak_mixing_consistent)
      ++dz_count;
    result.notes.push_back(
        specs[k] + ": final_abs_dev = " +
        textio::fmt_double(report.cesaro_abs_devs.back()) +
        (report.density_zero_evaluated
             ? std::string(", density_zero = ") +
                   (report.density_zero.weak_mixing_consistent
                        ? "consistent"
                        : "inconsistent")
             : std::string()));
  }
  body << "hierarchy_consistent_count " << consistent_count << "\n";
  body << "density_zero_consistent_count " << dz_count << "\n";
  body << "end\n";
  write_text(out, body.str());
  add_artifact(result, out);
}

void run_finite_check(const ExperimentConfig& cfg, RunResult& result) {
  const LoadedFinite loaded = load_finite(cfg.get("matrix"));
  const FiniteCorrespondence& fc = loaded.fc;
  const std::vector<FiniteMeasure> extremes = invariant_measures(fc);
  FiniteMeasure mu = loaded.mu;
  if (!loaded.has_mu) {
    if (extremes.size() != 1)
      throw config_error(
          "matrix file carries no measure and the model has " +
          std::to_string(extremes.size()) +
          " extreme invariant measures; add an explicit 'mu' line");
    mu = extremes.front();
  }

  const HierarchyCheck hier = check_hierarchy(fc, mu);
  const bool avg_agree = check_average_mixing_equivalence(fc, mu);
  const bool main_feasible = static_cast<long long>(fc.m) * fc.m <= 20;
  MainTheoremCheck main_check;
  if (main_feasible) main_check = check_main_theorem(fc, mu);

  std::ostringstream body;
  body << "finite-check v1\n";
  body << "m " << fc.m << "\n";
  body << "d " << fc.d << "\n";
  body << "invariant_measures " << extremes.size() << "\n";
  body << "ergodic " << (hier.ergodic ? 1 : 0) << "\n";
  body << "mixing " << (hier.mixing ? 1 : 0) << "\n";
  body << "weak_mixing " << (hier.weak_mixing ? 1 : 0) << "\n";
  body << "hierarchy_consistent " << (hier.consistent ? 1 : 0) << "\n";
  body << "average_mixing_agree " << (avg_agree ? 1 : 0) << "\n";
  body << "main_theorem_evaluated " << (main_feasible ? 1 : 0) << "\n";
  if (main_feasible) {
    body << "product_ergodic " << (main_check.product_ergodic ? 1 : 0) << "\n";
    body << "product_weak_mixing "
         << (main_check.product_weak_mixing ? 1 : 0) << "\n";
    body << "main_theorem_consistent " << (main_check.consistent ? 1 : 0)
         << "\n";
  }

  const bool have_sets = cfg.has("set_a") && cfg.has("set_b");
  body << "set_average_evaluated " << (have_sets ? 1 : 0) << "\n";
  if (have_sets) {
    const SetAverageResult sa = check_set_average_inequality(
        fc, mu, parse_index_list(cfg.get("set_a"), "set_a"),
        parse_index_list(cfg.get("set_b"), "set_b"),
        static_cast<int>(cfg.get_int_or("horizon", 64)));
    body << "set_limit " << textio::fmt_double(sa.limit_estimate) << "\n";
    body << "set_bound " << textio::fmt_double(sa.product_bound) << "\n";
    body << "set_b_almost_invariant " << (sa.b_almost_invariant ? 1 : 0)
         << "\n";
    result.notes.push_back(
        "set average = " + textio::fmt_double(sa.limit_estimate) +
        " vs bound " + textio::fmt_double(sa.product_bound));
  }
  body << "end\n";
  write_text(cfg.get("out"), body.str());
  add_artifact(result, cfg.get("out"));

  result.notes.push_back("ergodic = " + yesno(hier.ergodic));
  result.notes.push_back("mixing = " + yesno(hier.mixing));
  result.notes.push_back("weak_mixing = " + yesno(hier.weak_mixing));
  result.notes.push_back("hierarchy_consistent = " + yesno(hier.consistent));
  result.notes.push_back("average_mixing_agree = " + yesno(avg_agree));
  if (main_feasible)
    result.notes.push_back("main_theorem_consistent = " +
                           yesno(main_check.consistent));
  else
    result.notes.push_back(
        "main_theorem skipped: product would need subset enumeration on " +
        std::to_string(static_cast<long long>(fc.m) * fc.m) + " states");
}

void run_render(const ExperimentConfig& cfg, RunResult& result) {
  const WeightedPointCloud cloud = load_cloud(cfg.get("cloud"));
  RenderParams params;
  params.pixels = static_cast<int>(cfg.get_int_or("pixels", 512));
  if (cfg.has("window")) {
    const std::vector<std::string> toks = split_tokens(cfg.get("window"));
    if (toks.size() != 4)
      throw config_error(
          "window must be '<xmin> <xmax> <ymin> <ymax>', got '" +
          cfg.get("window") + "'");
    params.auto_window = false;
    params.xmin = textio::parse_double(toks[0], "window");
    params.xmax = textio::parse_double(toks[1], "window");
    params.ymin = textio::parse_double(toks[2], "window");
    params.ymax = textio::parse_double(toks[3], "window");
  }
  const std::vector<std::string> warnings =
      render_cloud(cloud, params, cfg.get("out"));
  add_artifact(result, cfg.get("out"));
  result.notes.push_back("pixels = " + std::to_string(params.pixels));
  for (const std::string& w : warnings)
    result.notes.push_back("warning: " + w);
}

void dispatch(const ExperimentConfig& cfg, RunResult& result) {
  if (cfg.action == "degrees") return run_degrees(cfg, result);
  if (cfg.action == "preimage") return run_preimage(cfg, result);
  if (cfg.action == "measure") return run_measure(cfg, result);
  if (cfg.action == "correlate") return run_correlate(cfg, result);
  if (cfg.action == "birkhoff") return run_birkhoff(cfg, result);
  if (cfg.action == "mixing-report") return run_mixing_report(cfg, result);
  if (cfg.action == "finite-check") return run_finite_check(cfg, result);
  if (cfg.action == "render") return run_render(cfg, result);
  throw config_error("unreachable action");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  const std::vector<textio::Line> lines = textio::read_lines(path);
  ExperimentConfig cfg;
  bool first = true;
  for (const textio::Line& line : lines) {
    const std::string& key = line.tokens[0];
    if (first && key == "manifest" && line.tokens.size() == 2 &&
        line.tokens[1] == "v1") {
      first = false;
      continue;  // manifests parse as configs again
    }
    first = false;
    if (key == "end" && line.tokens.size() == 1) continue;
    if (key.rfind("run.", 0) == 0) continue;  // manifest provenance lines
    if (line.tokens.size() < 2)
      throw config_error(textio::loc(path, line.number) + ": key '" + key +
                         "' has no value");
    std::string value = line.tokens[1];
    for (std::size_t k = 2; k < line.tokens.size(); ++k)
      value += " " + line.tokens[k];
    if (key == "action") {
      if (!cfg.action.empty())
        throw config_error(textio::loc(path, line.number) +
                           ": duplicate key 'action'");
      if (line.tokens.size() != 2)
        throw config_error(textio::loc(path, line.number) +
                           ": action must be a single word");
      cfg.action = value;
      continue;
    }
    if (known_keys().count(key) == 0)
      throw config_error(textio::loc(path, line.number) +
                         ": unknown config key '" + key + "'");
    if (cfg.values.count(key) > 0)
      throw config_error(textio::loc(path, line.number) + ": duplicate key '" +
                         key + "'");
    cfg.values[key] = std::move(value);
  }
  // Every run is reproducible from its config alone, so the seed is always
  // materialized even when defaulted.
  if (cfg.values.count("seed") == 0) cfg.values["seed"] = "0";
  return cfg;
}

std::string ExperimentConfig::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end())
    throw config_error("config key '" + key + "' is required for action '" +
                       action + "'");
  return it->second;
}

std::string ExperimentConfig::get_or(const std::string& key,
                                     const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

long long ExperimentConfig::get_int(const std::string& key) const {
  return textio::parse_int(get(key), "config key '" + key + "'");
}

long long ExperimentConfig::get_int_or(const std::string& key,
                                       long long fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  return textio::parse_int(it->second, "config key '" + key + "'");
}

double ExperimentConfig::get_double_or(const std::string& key,
                                       double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  return textio::parse_double(it->second, "config key '" + key + "'");
}

RunResult run(const ExperimentConfig& config) {
  if (config.action.empty())
    throw config_error("config must name an action");
  if (known_actions().count(config.action) == 0) {
    std::string expected;
    for (const std::string& a : known_actions())
      expected += (expected.empty() ? "" : "|") + a;
    throw config_error("unknown action '" + config.action + "'; expected " +
                       expected);
  }

  RunResult result;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    dispatch(config, result);
  } catch (const config_error& e) {
    throw config_error(config.action + ": " + e.what());
  } catch (const cap_exceeded& e) {
    throw cap_exceeded(config.action + ": " + e.what());
  } catch (const numeric_error& e) {
    throw numeric_error(config.action + ": " + e.what());
  }
  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();

  result.manifest_path = config.get_or(
      "manifest", config.has("out") ? config.get("out") + ".manifest"
                                    : config.action + ".manifest");
  std::ostringstream body;
  body << "manifest v1\n";
  body << "action " << config.action << "\n";
  for (const auto& [key, value] : config.values)
    body << key << " " << value << "\n";
  body << "run.version " << kVersion << "\n";
  body << "run.wall_ms " << wall_ms << "\n";
  for (const RunArtifact& a : result.artifacts) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(a.digest));
    body << "run.artifact " << hex << " " << a.path << "\n";
  }
  body << "end\n";
  write_text(result.manifest_path, body.str());
  return result;
}

// ------------------------------------------------------------- functions

namespace {

struct Segment {
  std::string text;
  std::size_t pos = 0;
};

std::vector<Segment> split_spec(const std::string& spec) {
  std::vector<Segment> out;
  Segment cur;
  cur.pos = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i] == ':') {
      out.push_back(cur);
      cur = Segment{};
      cur.pos = i + 1;
    } else {
      cur.text += spec[i];
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void spec_fail(const std::string& spec, std::size_t pos,
                            const std::string& what) {
  throw config_error("function spec '" + spec + "': " + what +
                     " at position " + std::to_string(pos));
}

double spec_double(const std::string& spec, const Segment& seg) {
  char* end = nullptr;
  const double v = std::strtod(seg.text.c_str(), &end);
  if (seg.text.empty() || end != seg.text.c_str() + seg.text.size())
    spec_fail(spec, seg.pos, "expected a number, got '" + seg.text + "'");
  return v;
}

long long spec_int(const std::string& spec, const Segment& seg) {
  char* end = nullptr;
  const long long v = std::strtoll(seg.text.c_str(), &end, 10);
  if (seg.text.empty() || end != seg.text.c_str() + seg.text.size())
    spec_fail(spec, seg.pos, "expected an integer, got '" + seg.text + "'");
  return v;
}

void spec_arity(const std::string& spec, const std::vector<Segment>& segs,
                std::size_t want) {
  if (segs.size() > want)
    spec_fail(spec, segs[want].pos, "unexpected extra segment");
  if (segs.size() < want)
    spec_fail(spec, spec.size(), "missing segment");
}

}  // namespace

RealFn parse_function_spec(const std::string& spec) {
  const std::vector<Segment> segs = split_spec(spec);
  const std::string& head = segs[0].text;

  if (head == "const") {
    spec_arity(spec, segs, 2);
    const double v = spec_double(spec, segs[1]);
    return [v](const SpherePoint&) { return v; };
  }

  if (head == "stereo") {
    spec_arity(spec, segs, 2);
    const std::vector<std::string> parts = split_on(segs[1].text, ',');
    if (parts.size() != 3)
      spec_fail(spec, segs[1].pos, "expected three exponents '<i1>,<i2>,<i3>'");
    std::array<int, 3> exps{};
    std::size_t pos = segs[1].pos;
    for (int k = 0; k < 3; ++k) {
      Segment seg{parts[k], pos};
      const long long e = spec_int(spec, seg);
      if (e < 0 || e > 40)
        spec_fail(spec, pos, "exponent out of range [0, 40]");
      exps[k] = static_cast<int>(e);
      pos += parts[k].size() + 1;
    }
    return [exps](const SpherePoint& z) {
      const std::array<double, 3> x = TestDictionary::embed(z);
      double v = 1.0;
      for (int k = 0; k < 3; ++k)
        for (int e = 0; e < exps[k]; ++e) v *= x[k];
      return v;
    };
  }

  if (head == "fourier") {
    spec_arity(spec, segs, 3);
    const long long k = spec_int(spec, segs[1]);
    if (k < 1 || k > 64)
      spec_fail(spec, segs[1].pos, "harmonic index out of range [1, 64]");
    const bool real_part = segs[2].text == "re";
    if (!real_part && segs[2].text != "im")
      spec_fail(spec, segs[2].pos, "expected 're' or 'im', got '" +
                                       segs[2].text + "'");
    const double kk = static_cast<double>(k);
    return [kk, real_part](const SpherePoint& z) {
      if (z.at_infinity) return 0.0;
      const double re = z.value.real();
      const double im = z.value.imag();
      // |z|^k / (1+|z|^2)^(k/2) = t^(k/2) with t = |z|^2/(1+|z|^2); the
      // reciprocal form keeps t finite through |z|^2 overflow.
      const double r2 = re * re + im * im;
      const double t = 1.0 / (1.0 + 1.0 / r2);  // r2 = 0 gives t = 0
      const double amp = std::pow(t, kk / 2.0);
      const double theta = std::atan2(im, re);
      return amp * (real_part ? std::cos(kk * theta) : std::sin(kk * theta));
    };
  }

  if (head == "indicator") {
    if (segs.size() < 2)
      spec_fail(spec, spec.size(), "missing indicator family");
    const std::string& family = segs[1].text;
    if (family == "annulus") {
      spec_arity(spec, segs, 4);
      const double r1 = spec_double(spec, segs[2]);
      const double r2 = spec_double(spec, segs[3]);
      if (!(r1 >= 0.0)) spec_fail(spec, segs[2].pos, "radius must be >= 0");
      if (!(r2 > r1))
        spec_fail(spec, segs[3].pos, "outer radius must exceed inner radius");
      return [r1, r2](const SpherePoint& z) {
        if (z.at_infinity) return 0.0;
        const double r = std::hypot(z.value.real(), z.value.imag());
        return (r > r1 && r <= r2) ? 1.0 : 0.0;
      };
    }
    if (family == "halfplane") {
      spec_arity(spec, segs, 4);
      const bool on_re = segs[2].text == "re";
      if (!on_re && segs[2].text != "im")
        spec_fail(spec, segs[2].pos, "expected 're' or 'im', got '" +
                                         segs[2].text + "'");
      const double c = spec_double(spec, segs[3]);
      return [on_re, c](const SpherePoint& z) {
        if (z.at_infinity) return 0.0;
        const double v = on_re ? z.value.real() : z.value.imag();
        return v > c ? 1.0 : 0.0;
      };
    }
    spec_fail(spec, segs[1].pos,
              "unknown indicator family '" + family + "'");
  }

  spec_fail(spec, 0, "unknown function family '" + head + "'");
}

// --------------------------------------------------------------- renderer

std::vector<std::string> render_cloud(const WeightedPointCloud& cloud,
                                      const RenderParams& params,
                                      const std::string& out_path) {
  cloud.validate();
  if (params.pixels < 1 || params.pixels > 8192)
    throw config_error("pixel count " + std::to_string(params.pixels) +
                       " is out of range [1, 8192]");
  std::vector<std::string> warnings;

  double xmin = params.xmin, xmax = params.xmax;
  double ymin = params.ymin, ymax = params.ymax;
  if (params.auto_window) {
    bool any = false;
    for (const SpherePoint& p : cloud.points) {
      if (p.at_infinity) continue;
      const double x = p.value.real();
      const double y = p.value.imag();
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
    if (!any) {
      xmin = ymin = -1.0;
      xmax = ymax = 1.0;
      warnings.push_back("cloud has no finite points; window defaults to "
                         "[-1, 1] x [-1, 1]");
    } else {
      const double dx = xmax - xmin;
      const double dy = ymax - ymin;
      const double px = dx > 0 ? 0.05 * dx : 0.5;
      const double py = dy > 0 ? 0.05 * dy : 0.5;
      xmin -= px;
      xmax += px;
      ymin -= py;
      ymax += py;
    }
  } else {
    if (!(xmin < xmax) || !(ymin < ymax))
      throw config_error("render window is degenerate: need xmin < xmax and "
                         "ymin < ymax");
  }

  const int n = params.pixels;
  std::vector<double> mass(static_cast<std::size_t>(n) * n, 0.0);
  std::size_t at_infinity = 0;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const SpherePoint& p = cloud.points[k];
    if (p.at_infinity) {
      ++at_infinity;
      continue;
    }
    const double x = p.value.real();
    const double y = p.value.imag();
    if (x < xmin || x >= xmax || y < ymin || y >= ymax) continue;
    int col = static_cast<int>((x - xmin) / (xmax - xmin) * n);
    int row = static_cast<int>((ymax - y) / (ymax - ymin) * n);
    col = std::min(col, n - 1);
    row = std::min(row, n - 1);
    mass[static_cast<std::size_t>(row) * n + col] += cloud.weights[k];
  }

  double peak = 0.0;
  for (const double m : mass) peak = std::max(peak, m);
  std::vector<unsigned char> bytes(mass.size(), 0);
  if (peak <= 0.0) {
    warnings.push_back("window contains no cloud mass; image is all dark");
  } else {
    // Log shading across four decades below the peak.
    const double eps = peak * 1e-4;
    const double denom = std::log1p(peak / eps);
    for (std::size_t k = 0; k < mass.size(); ++k) {
      if (mass[k] <= 0.0) continue;
      const double shade = std::log1p(mass[k] / eps) / denom;
      bytes[k] = static_cast<unsigned char>(
          std::min(255.0, std::floor(255.0 * shade)));
    }
  }
  if (at_infinity > 0)
    warnings.push_back(std::to_string(at_infinity) +
                       " points at infinity cannot be rendered");

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw config_error("cannot open file for writing: " + out_path);
  out << "P5\n" << n << " " << n << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw config_error("failed writing file: " + out_path);
  return warnings;
}

}  // namespace corrlab

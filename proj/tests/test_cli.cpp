// End-to-end runner coverage: config ingestion, the function-spec grammar,
// every action through run(), manifest reruns (byte-identical artifacts),
// the PGM renderer, and the installed binary's exit codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "corrlab/cli.hpp"
#include "corrlab/errors.hpp"
#include "corrlab/finite.hpp"
#include "helpers.hpp"

using namespace corrlab;
using namespace corrlab::testing;

namespace {

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  REQUIRE(static_cast<bool>(out));
  out << body;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool file_exists(const std::string& path) {
  return static_cast<bool>(std::ifstream(path));
}

ExperimentConfig config_from(const std::string& body) {
  const std::string path = "cli_cfg_tmp.cfg";
  write_file(path, body);
  const ExperimentConfig cfg = ExperimentConfig::from_file(path);
  std::remove(path.c_str());
  return cfg;
}

// Grabs "key value..." lines out of a v1-format artifact.
std::string artifact_value(const std::string& text, const std::string& key) {
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

SpherePoint pt(double re, double im) { return SpherePoint(re, im); }

// Offset of the pixel payload: one past the third header newline.
std::size_t pgm_payload(const std::string& img) {
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k) pos = img.find('\n', pos) + 1;
  return pos;
}

}  // namespace

// ---------------------------------------------------------------------
// function specs

TEST_CASE("specs: constants and stereo monomials") {
  const RealFn c = parse_function_spec("const:2.5");
  CHECK(c(pt(0, 0)) == 2.5);
  CHECK(c(SpherePoint::infinity()) == 2.5);

  // stereo:0,0,1 is the height coordinate (|z|^2 - 1) / (|z|^2 + 1).
  const RealFn x3 = parse_function_spec("stereo:0,0,1");
  CHECK(x3(pt(0, 0)) == doctest::Approx(-1.0));
  CHECK(x3(SpherePoint::infinity()) == doctest::Approx(1.0));
  CHECK(x3(pt(1, 0)) == doctest::Approx(0.0));

  // stereo:2,0,0 = x1^2 with x1 = 2 Re z / (1 + |z|^2); at z = 1, x1 = 1.
  const RealFn x1sq = parse_function_spec("stereo:2,0,0");
  CHECK(x1sq(pt(1, 0)) == doctest::Approx(1.0));
  CHECK(x1sq(pt(0, 1)) == doctest::Approx(0.0));
  CHECK(x1sq(pt(-1, 0)) == doctest::Approx(1.0));

  const RealFn one = parse_function_spec("stereo:0,0,0");
  CHECK(one(pt(3, 4)) == 1.0);
}

TEST_CASE("specs: fourier harmonics stay bounded through overflow") {
  const RealFn f1re = parse_function_spec("fourier:1:re");
  const RealFn f1im = parse_function_spec("fourier:1:im");
  const RealFn f2im = parse_function_spec("fourier:2:im");

  // z = 1: amplitude sqrt(1/2), angle 0.
  CHECK(f1re(pt(1, 0)) == doctest::Approx(std::sqrt(0.5)));
  CHECK(f1im(pt(1, 0)) == doctest::Approx(0.0));
  // z = i: fourier:2 sees angle pi, amplitude 1/2.
  CHECK(f2im(pt(0, 1)) == doctest::Approx(0.0).epsilon(1e-12));
  const RealFn f2re = parse_function_spec("fourier:2:re");
  CHECK(f2re(pt(0, 1)) == doctest::Approx(-0.5));
  // Zero and infinity are the removable ends.
  CHECK(f1re(pt(0, 0)) == 0.0);
  CHECK(f1re(SpherePoint::infinity()) == 0.0);
  // |z|^2 overflows a double; the reciprocal form must not.
  CHECK(f1re(pt(1e200, 0)) == doctest::Approx(1.0));
  CHECK(std::isfinite(f2im(pt(-1e300, 1e300))));
  // On the unit circle the amplitude is exactly (1/2)^(k/2).
  const double a = std::cos(0.7), b = std::sin(0.7);
  CHECK(f1re(pt(a, b)) == doctest::Approx(std::sqrt(0.5) * std::cos(0.7)));
  CHECK(f1im(pt(a, b)) == doctest::Approx(std::sqrt(0.5) * std::sin(0.7)));
}

TEST_CASE("specs: indicators use half-open annuli and strict half-planes") {
  const RealFn ann = parse_function_spec("indicator:annulus:0.5:2");
  CHECK(ann(pt(0.5, 0)) == 0.0);   // inner radius excluded
  CHECK(ann(pt(0, 2)) == 1.0);     // outer radius included
  CHECK(ann(pt(2.001, 0)) == 0.0);
  CHECK(ann(pt(1, 0)) == 1.0);
  CHECK(ann(SpherePoint::infinity()) == 0.0);

  const RealFn hp = parse_function_spec("indicator:halfplane:re:0.25");
  CHECK(hp(pt(1, -5)) == 1.0);
  CHECK(hp(pt(0.25, 9)) == 0.0);  // boundary excluded
  CHECK(hp(pt(0, 0)) == 0.0);
  CHECK(hp(SpherePoint::infinity()) == 0.0);

  const RealFn hpim = parse_function_spec("indicator:halfplane:im:-1");
  CHECK(hpim(pt(100, 0)) == 1.0);
  CHECK(hpim(pt(0, -2)) == 0.0);
}

TEST_CASE("specs: grammar violations name the offending position") {
  auto fails_at = [](const std::string& spec, const std::string& fragment) {
    try {
      parse_function_spec(spec);
      FAIL("expected config_error for spec '", spec, "'");
    } catch (const config_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("position") != std::string::npos);
      CHECK_MESSAGE(msg.find(fragment) != std::string::npos,
                    "missing '", fragment, "' in: ", msg);
    }
  };
  fails_at("sinusoid:3", "unknown function family");
  fails_at("const", "missing segment");
  fails_at("const:1:2", "unexpected extra segment");
  fails_at("const:abc", "expected a number");
  fails_at("fourier:0:re", "out of range");
  fails_at("fourier:2:zz", "expected 're' or 'im'");
  fails_at("stereo:1,2", "three exponents");
  fails_at("stereo:1,2,50", "out of range");
  fails_at("indicator:annulus:2:1", "outer radius must exceed");
  fails_at("indicator:annulus:-1:1", "radius must be >= 0");
  fails_at("indicator:disk:0:1", "unknown indicator family");

  // Position is the character offset of the bad segment.
  try {
    parse_function_spec("fourier:77:re");
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("position 8") != std::string::npos);
  }
}

// ---------------------------------------------------------------------
// config files

TEST_CASE("config: tokens, comments, defaults") {
  const ExperimentConfig cfg = config_from(
      "# experiment\n"
      "action degrees\n"
      "correspondence some file.corr   # trailing comment\n"
      "window -2 2   -1.5 1.5\n");
  CHECK(cfg.action == "degrees");
  CHECK(cfg.get("correspondence") == "some file.corr");
  CHECK(cfg.get("window") == "-2 2 -1.5 1.5");  // runs of spaces normalized
  CHECK(cfg.get("seed") == "0");                // materialized default
  CHECK(cfg.get_int_or("cap", 77) == 77);
  CHECK(cfg.get_double_or("window_tol", 0.25) == 0.25);
  CHECK_FALSE(cfg.has("out"));
  CHECK_THROWS_WITH_AS(static_cast<void>(cfg.get("out")),
                       doctest::Contains("'out' is required"), config_error);
}

TEST_CASE("config: malformed files are rejected with locations") {
  auto rejects = [](const std::string& body, const std::string& fragment) {
    const std::string path = "cli_badcfg.cfg";
    write_file(path, body);
    try {
      ExperimentConfig::from_file(path);
      std::remove(path.c_str());
      FAIL("expected config_error containing '", fragment, "'");
    } catch (const config_error& e) {
      std::remove(path.c_str());
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos,
                    "missing '", fragment, "' in: ", e.what());
    }
  };
  rejects("action degrees\nseed 1\nseed 2\n", "duplicate key 'seed'");
  rejects("action a\naction b\n", "duplicate key 'action'");
  rejects("action one two\n", "action must be a single word");
  rejects("flavor vanilla\n", "unknown config key 'flavor'");
  rejects("action degrees\nout\n", "has no value");

  // Values are typed lazily: the file accepts 'seed x', the getter rejects.
  const ExperimentConfig lazy = config_from("action degrees\nseed x\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(lazy.get_int_or("seed", 0)),
                       doctest::Contains("expected an integer"), config_error);
}

TEST_CASE("config: a manifest parses as the original config") {
  const std::string path = "cli_manifest_like.cfg";
  write_file(path,
             "manifest v1\n"
             "action degrees\n"
             "correspondence a.corr\n"
             "seed 3\n"
             "run.version 0.1.0\n"
             "run.wall_ms 12\n"
             "run.artifact 00ff00ff00ff00ff degrees.txt\n"
             "end\n");
  const ExperimentConfig cfg = ExperimentConfig::from_file(path);
  std::remove(path.c_str());
  CHECK(cfg.action == "degrees");
  CHECK(cfg.get("correspondence") == "a.corr");
  CHECK(cfg.get("seed") == "3");
  CHECK(cfg.values.size() == 2);  // provenance lines skipped entirely
}

// ---------------------------------------------------------------------
// actions

TEST_CASE("run: degrees reports d and d_f") {
  save_correspondence("cli_semi.corr", make_semigroup());
  write_file("cli_deg.cfg",
             "action degrees\ncorrespondence cli_semi.corr\nout cli_deg.txt\n");
  const RunResult res = run(ExperimentConfig::from_file("cli_deg.cfg"));
  REQUIRE(res.notes.size() >= 3);
  CHECK(res.notes[0] == "label = semigroup");
  CHECK(res.notes[1] == "d = 4");
  CHECK(res.notes[2] == "d_f = 2");
  REQUIRE(res.artifacts.size() == 1);
  const std::string text = read_file("cli_deg.txt");
  CHECK(artifact_value(text, "d") == "4");
  CHECK(artifact_value(text, "d_f") == "2");
  CHECK(file_exists(res.manifest_path));
}

TEST_CASE("run: unknown or missing action fails before any work") {
  ExperimentConfig cfg;
  CHECK_THROWS_WITH_AS(run(cfg), doctest::Contains("must name an action"),
                       config_error);
  cfg.action = "transmogrify";
  CHECK_THROWS_WITH_AS(run(cfg), doctest::Contains("unknown action"),
                       config_error);
}

TEST_CASE("run: preimage computes the exact backward tree") {
  save_correspondence("cli_sq.corr", make_squaring());
  write_file("cli_pre.cfg",
             "action preimage\ncorrespondence cli_sq.corr\nstart 16 0\n"
             "depth 2\nout cli_pre.cloud\n");
  const RunResult res = run(ExperimentConfig::from_file("cli_pre.cfg"));
  CHECK(res.notes[0] == "points = 4");
  const WeightedPointCloud cloud = load_cloud("cli_pre.cloud");
  REQUIRE(cloud.size() == 4);
  // Fourth roots of 16: +-2, +-2i, each with weight 1/4.
  int found = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(cloud.weights[k] == doctest::Approx(0.25));
    const Complex z = cloud.points[k].value;
    if (std::abs(z - Complex(2, 0)) < 1e-9 ||
        std::abs(z - Complex(-2, 0)) < 1e-9 ||
        std::abs(z - Complex(0, 2)) < 1e-9 ||
        std::abs(z - Complex(0, -2)) < 1e-9)
      ++found;
  }
  CHECK(found == 4);

  // Tight cap raises the taxonomy error, prefixed with the action.
  write_file("cli_pre_cap.cfg",
             "action preimage\ncorrespondence cli_sq.corr\nstart 16 0\n"
             "depth 20\ncap 8\nout cli_pre2.cloud\n");
  CHECK_THROWS_WITH_AS(run(ExperimentConfig::from_file("cli_pre_cap.cfg")),
                       doctest::Contains("preimage:"), cap_exceeded);
}

TEST_CASE("run: measure rejects zero samples and leaves no artifact") {
  save_correspondence("cli_semi.corr", make_semigroup());
  std::remove("cli_ms_none.cloud");
  write_file("cli_ms0.cfg",
             "action measure\ncorrespondence cli_semi.corr\nstart 3 0\n"
             "depth 5\nsamples 0\nout cli_ms_none.cloud\n");
  CHECK_THROWS_WITH_AS(run(ExperimentConfig::from_file("cli_ms0.cfg")),
                       doctest::Contains("samples must be at least 1"),
                       config_error);
  CHECK_FALSE(file_exists("cli_ms_none.cloud"));
  CHECK_FALSE(file_exists("cli_ms_none.cloud.manifest"));
}

TEST_CASE("run: measure writes a cloud and reports its residual") {
  save_correspondence("cli_semi.corr", make_semigroup());
  write_file("cli_ms.cfg",
             "action measure\ncorrespondence cli_semi.corr\nstart 3 0\n"
             "depth 10\nsamples 200\nseed 11\nout cli_ms.cloud\n");
  const RunResult res = run(ExperimentConfig::from_file("cli_ms.cfg"));
  CHECK(res.notes[0] == "points = 200");
  REQUIRE(res.notes.size() >= 2);
  CHECK(res.notes[1].rfind("invariance_residual = ", 0) == 0);
  const WeightedPointCloud cloud = load_cloud("cli_ms.cloud");
  CHECK(cloud.size() == 200);
}

TEST_CASE("run: correlate matches the library report exactly") {
  save_correspondence("cli_semi.corr", make_semigroup());
  const WeightedPointCloud circle = make_circle_cloud(300, 21);
  save_cloud("cli_circle.cloud", circle);
  write_file("cli_corr.cfg",
             "action correlate\ncorrespondence cli_semi.corr\n"
             "measure cli_circle.cloud\nphi fourier:1:re\npsi fourier:1:re\n"
             "horizon 6\ncap 100000\nseed 5\nout cli_corr.report\n");
  const RunResult res = run(ExperimentConfig::from_file("cli_corr.cfg"));
  REQUIRE(res.artifacts.size() == 1);

  const CorrelationReport got = load_report("cli_corr.report");
  ReportOptions opt;
  opt.cap = 100000;
  opt.sample.seed = 5;
  const CorrelationReport direct = correlation_report(
      make_semigroup(), load_cloud("cli_circle.cloud"),
      parse_function_spec("fourier:1:re"), parse_function_spec("fourier:1:re"),
      6, opt);
  REQUIRE(got.series.size() == direct.series.size());
  for (std::size_t k = 0; k < got.series.size(); ++k)
    CHECK(got.series[k] == doctest::Approx(direct.series[k]).epsilon(1e-15));
  CHECK(got.target == doctest::Approx(direct.target).epsilon(1e-15));

  bool saw_hierarchy = false;
  for (const std::string& note : res.notes)
    if (note.rfind("hierarchy_consistent = ", 0) == 0) saw_hierarchy = true;
  CHECK(saw_hierarchy);
}

TEST_CASE("run: birkhoff on the identity map is constant") {
  save_correspondence("cli_id.corr", make_identity());
  write_file("cli_bk.cfg",
             "action birkhoff\ncorrespondence cli_id.corr\nphi const:1\n"
             "start 0.5 0.25\nhorizon 6\nout cli_bk.txt\n");
  const RunResult res = run(ExperimentConfig::from_file("cli_bk.cfg"));
  CHECK(res.notes[0] == "final_average = 1");
  const std::string text = read_file("cli_bk.txt");
  CHECK(artifact_value(text, "horizon") == "6");
  CHECK(artifact_value(text, "start") == "0.5 0.25");
  std::istringstream ss(text);
  std::string line;
  int partials = 0;
  while (std::getline(ss, line)) {
    if (line.rfind("partial ", 0) != 0) continue;
    ++partials;
    std::istringstream fields(line);
    std::string word;
    int idx = 0;
    double v = 0;
    fields >> word >> idx >> v;
    CHECK(v == doctest::Approx(1.0));
  }
  CHECK(partials == 6);
}

TEST_CASE("run: mixing-report fans out per-function reports") {
  save_correspondence("cli_semi.corr", make_semigroup());
  save_cloud("cli_circle.cloud", make_circle_cloud(200, 21));
  write_file("cli_mr.cfg",
             "action mixing-report\ncorrespondence cli_semi.corr\n"
             "measure cli_circle.cloud\nhorizon 4\ncap 50000\nseed 9\n"
             "functions fourier:1:re;const:2\nout cli_mr.txt\n");
  const RunResult res = run(ExperimentConfig::from_file("cli_mr.cfg"));
  REQUIRE(res.artifacts.size() == 3);  // two reports + the summary
  CHECK(res.artifacts[0].path == "cli_mr.txt.0.report");
  CHECK(res.artifacts[1].path == "cli_mr.txt.1.report");
  CHECK(res.artifacts[2].path == "cli_mr.txt");

  const CorrelationReport r0 = load_report("cli_mr.txt.0.report");
  const CorrelationReport r1 = load_report("cli_mr.txt.1.report");
  CHECK(r0.seed == 9);   // per-function sub-seeds derive from the config seed
  CHECK(r1.seed == 10);
  CHECK(r1.target == doctest::Approx(4.0));  // const:2 against itself

  const std::string text = read_file("cli_mr.txt");
  CHECK(artifact_value(text, "functions") == "2");
  CHECK(text.find("fn 0 spec fourier:1:re") != std::string::npos);
  CHECK(text.find("fn 1 spec const:2") != std::string::npos);
  CHECK(text.find("hierarchy_consistent_count 2") != std::string::npos);
}

TEST_CASE("run: finite-check reproduces the worked swap verdicts") {
  {
    std::vector<std::vector<int>> entries = {{0, 1}, {1, 0}};
    const FiniteCorrespondence swap = FiniteCorrespondence::create(entries);
    save_finite("cli_swap.fin", swap);
  }
  write_file("cli_fc.cfg",
             "action finite-check\nmatrix cli_swap.fin\nout cli_fc.txt\n"
             "set_a 0\nset_b 0,1\n");
  const RunResult res = run(ExperimentConfig::from_file("cli_fc.cfg"));
  const std::string text = read_file("cli_fc.txt");
  CHECK(artifact_value(text, "invariant_measures") == "1");
  CHECK(artifact_value(text, "ergodic") == "1");
  CHECK(artifact_value(text, "mixing") == "0");
  CHECK(artifact_value(text, "weak_mixing") == "0");
  CHECK(artifact_value(text, "hierarchy_consistent") == "1");
  CHECK(artifact_value(text, "average_mixing_agree") == "1");
  CHECK(artifact_value(text, "main_theorem_evaluated") == "1");
  CHECK(artifact_value(text, "product_ergodic") == "0");
  CHECK(artifact_value(text, "main_theorem_consistent") == "1");
  CHECK(artifact_value(text, "set_average_evaluated") == "1");
  CHECK(artifact_value(text, "set_limit") == "0.5");
  CHECK(artifact_value(text, "set_b_almost_invariant") == "1");

  bool saw = false;
  for (const std::string& note : res.notes)
    if (note == "weak_mixing = false") saw = true;
  CHECK(saw);
}

TEST_CASE("run: finite-check requires a measure when several exist") {
  {
    // Two disjoint swaps: two extreme invariant measures.
    std::vector<std::vector<int>> entries = {
        {0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}};
    const FiniteCorrespondence two = FiniteCorrespondence::create(entries);
    save_finite("cli_two.fin", two);
  }
  write_file("cli_fc2.cfg",
             "action finite-check\nmatrix cli_two.fin\nout cli_fc2.txt\n");
  CHECK_THROWS_WITH_AS(run(ExperimentConfig::from_file("cli_fc2.cfg")),
                       doctest::Contains("2 extreme invariant measures"),
                       config_error);

  // An explicit mu in the file resolves it.
  {
    std::vector<std::vector<int>> entries = {
        {0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}};
    const FiniteCorrespondence two = FiniteCorrespondence::create(entries);
    const FiniteMeasure mu = FiniteMeasure::from_vector({0.25, 0.25, 0.25, 0.25});
    save_finite("cli_two.fin", two, &mu);
  }
  const RunResult res = run(ExperimentConfig::from_file("cli_fc2.cfg"));
  const std::string text = read_file("cli_fc2.txt");
  CHECK(artifact_value(text, "invariant_measures") == "2");
  CHECK(artifact_value(text, "ergodic") == "0");  // block splits
  CHECK(artifact_value(text, "hierarchy_consistent") == "1");
  CHECK_FALSE(res.notes.empty());
}

// ---------------------------------------------------------------------
// renderer

TEST_CASE("render: ring cloud lights pixels, empty window stays dark") {
  // A deterministic ring of radius 2.
  std::vector<SpherePoint> pts;
  for (int k = 0; k < 256; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 256.0;
    pts.emplace_back(2.0 * std::cos(t), 2.0 * std::sin(t));
  }
  const WeightedPointCloud ring =
      WeightedPointCloud::equal_weights(std::move(pts), "ring");

  RenderParams params;
  params.pixels = 32;
  std::vector<std::string> warnings =
      render_cloud(ring, params, "cli_ring.pgm");
  CHECK(warnings.empty());
  const std::string img = read_file("cli_ring.pgm");
  CHECK(img.rfind("P5\n32 32\n255\n", 0) == 0);
  const std::size_t off = pgm_payload(img);
  CHECK(img.size() == off + 32 * 32);
  int lit = 0;
  for (std::size_t k = off; k < img.size(); ++k)
    if (static_cast<unsigned char>(img[k]) > 0) ++lit;
  CHECK(lit >= 32);  // the ring touches many cells
  // Center of the auto window holds no mass.
  const unsigned char center =
      static_cast<unsigned char>(img[off + 16 * 32 + 16]);
  CHECK(center == 0);

  // A window far from the cloud warns and renders all-dark.
  params.auto_window = false;
  params.xmin = 50;
  params.xmax = 51;
  params.ymin = 50;
  params.ymax = 51;
  warnings = render_cloud(ring, params, "cli_dark.pgm");
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("no cloud mass") != std::string::npos);
  const std::string dark = read_file("cli_dark.pgm");
  for (std::size_t k = pgm_payload(dark); k < dark.size(); ++k)
    CHECK(dark[k] == 0);
}

TEST_CASE("render: determinism, infinity points, and validation") {
  std::vector<SpherePoint> pts = {pt(0, 0), pt(1, 1),
                                  SpherePoint::infinity()};
  const WeightedPointCloud cloud =
      WeightedPointCloud::equal_weights(std::move(pts), "tiny");
  RenderParams params;
  params.pixels = 8;
  const std::vector<std::string> w1 =
      render_cloud(cloud, params, "cli_t1.pgm");
  render_cloud(cloud, params, "cli_t2.pgm");
  CHECK(read_file("cli_t1.pgm") == read_file("cli_t2.pgm"));
  REQUIRE(w1.size() == 1);
  CHECK(w1[0].find("infinity") != std::string::npos);

  params.pixels = 0;
  CHECK_THROWS_AS(render_cloud(cloud, params, "cli_t3.pgm"), config_error);
  params.pixels = 8;
  params.auto_window = false;
  params.xmin = 1;
  params.xmax = 1;
  CHECK_THROWS_WITH_AS(render_cloud(cloud, params, "cli_t3.pgm"),
                       doctest::Contains("degenerate"), config_error);

  // All points at infinity: defaulted window, empty mass, infinity count.
  std::vector<SpherePoint> infs = {SpherePoint::infinity(),
                                   SpherePoint::infinity()};
  const WeightedPointCloud allinf =
      WeightedPointCloud::equal_weights(std::move(infs), "inf");
  RenderParams auto_params;
  auto_params.pixels = 8;
  const std::vector<std::string> w2 =
      render_cloud(allinf, auto_params, "cli_t4.pgm");
  CHECK(w2.size() == 3);
}

// ---------------------------------------------------------------------
// manifests

TEST_CASE("run: rerunning from the manifest reproduces artifacts exactly") {
  save_correspondence("cli_semi.corr", make_semigroup());
  write_file("cli_rr.cfg",
             "action measure\ncorrespondence cli_semi.corr\nstart 3 0\n"
             "depth 8\nsamples 150\nseed 42\nout cli_rr.cloud\n"
             "manifest cli_rr.manifest\n");
  const RunResult first = run(ExperimentConfig::from_file("cli_rr.cfg"));
  REQUIRE(first.artifacts.size() == 1);
  CHECK(first.manifest_path == "cli_rr.manifest");
  const std::string manifest_text = read_file("cli_rr.manifest");
  CHECK(manifest_text.rfind("manifest v1\n", 0) == 0);
  CHECK(manifest_text.find("run.version ") != std::string::npos);
  CHECK(manifest_text.find("seed 42") != std::string::npos);

  // Reparse the manifest as a config and run again.
  const RunResult second = run(ExperimentConfig::from_file("cli_rr.manifest"));
  REQUIRE(second.artifacts.size() == 1);
  CHECK(second.artifacts[0].digest == first.artifacts[0].digest);
  CHECK(second.artifacts[0].path == first.artifacts[0].path);

  // The digest in the manifest matches the file on disk.
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(first.artifacts[0].digest));
  CHECK(manifest_text.find(std::string("run.artifact ") + hex +
                           " cli_rr.cloud") != std::string::npos);
}

TEST_CASE("run: manifest path defaults next to the artifact") {
  save_correspondence("cli_semi.corr", make_semigroup());
  write_file("cli_mp.cfg",
             "action degrees\ncorrespondence cli_semi.corr\nout cli_mp.txt\n");
  const RunResult res = run(ExperimentConfig::from_file("cli_mp.cfg"));
  CHECK(res.manifest_path == "cli_mp.txt.manifest");
  CHECK(file_exists("cli_mp.txt.manifest"));

  // Without an out path the action name is used.
  write_file("cli_mp2.cfg", "action degrees\ncorrespondence cli_semi.corr\n");
  const RunResult res2 = run(ExperimentConfig::from_file("cli_mp2.cfg"));
  CHECK(res2.manifest_path == "degrees.manifest");
  CHECK(res2.artifacts.empty());
}

// ---------------------------------------------------------------------
// the installed binary

#ifdef CORRLAB_BIN
namespace {
int run_binary(const std::string& args) {
  const std::string cmd = std::string(CORRLAB_BIN) + " " + args +
                          " > cli_bin_stdout.txt 2> cli_bin_stderr.txt";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}
}  // namespace

TEST_CASE("binary: exit codes follow the error taxonomy") {
  save_correspondence("cli_semi.corr", make_semigroup());
  save_correspondence("cli_sq.corr", make_squaring());

  write_file("cli_bin_ok.cfg",
             "action degrees\ncorrespondence cli_semi.corr\n");
  CHECK(run_binary("run cli_bin_ok.cfg") == 0);
  CHECK(read_file("cli_bin_stdout.txt").find("d = 4") != std::string::npos);

  // Subcommand form, and subcommand/config agreement.
  CHECK(run_binary("degrees cli_bin_ok.cfg") == 0);
  CHECK(run_binary("preimage cli_bin_ok.cfg") == 2);  // action mismatch

  write_file("cli_bin_bad.cfg", "action degrees\ncorrespondence missing.corr\n");
  CHECK(run_binary("run cli_bin_bad.cfg") == 2);
  CHECK(read_file("cli_bin_stderr.txt").find("config error") !=
        std::string::npos);

  write_file("cli_bin_cap.cfg",
             "action preimage\ncorrespondence cli_sq.corr\nstart 16 0\n"
             "depth 30\ncap 4\nout cli_bin_cap.cloud\n");
  CHECK(run_binary("run cli_bin_cap.cfg") == 4);
  CHECK(read_file("cli_bin_stderr.txt").find("cap exceeded") !=
        std::string::npos);

  CHECK(run_binary("") == 2);                    // missing subcommand
  CHECK(run_binary("degrees") == 2);             // missing config path
  CHECK(run_binary("--help") == 0);
}
#endif

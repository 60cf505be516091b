#include "corrlab/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "corrlab/errors.hpp"
#include "corrlab/rng.hpp"
#include "corrlab/roots.hpp"
#include "textio.hpp"
#include "walkers.hpp"

namespace corrlab {

namespace {

// Stream tags keep the draw sequences of unrelated operations disjoint
// even when they share a seed.
constexpr std::uint64_t kTagWalk = 0x77a1;
constexpr std::uint64_t kTagAnnulus = 0xa271;

// Work-unit size for deterministic chunked sampling: each chunk owns the
// stream (seed, chunk_index, tag), so the merged output is independent of
// how many threads pulled chunks.
constexpr std::size_t kChunkSize = 4096;

double kahan_sum(const std::vector<double>& xs) {
  double s = 0.0, c = 0.0;
  for (const double x : xs) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

std::string sanitize_note(std::string s) {
  for (char& ch : s)
    if (ch == '#' || ch == '\n' || ch == '\r') ch = '_';
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// WeightedPointCloud

void WeightedPointCloud::validate() const {
  if (points.size() != weights.size())
    throw config_error("cloud: " + std::to_string(points.size()) +
                       " points but " + std::to_string(weights.size()) +
                       " weights");
  if (points.empty()) throw config_error("cloud: empty");
  for (std::size_t k = 0; k < weights.size(); ++k)
    if (!(weights[k] >= 0.0) || !std::isfinite(weights[k]))
      throw config_error("cloud: weight " + std::to_string(k) +
                         " is not a nonnegative finite number");
  const double sum = kahan_sum(weights);
  if (std::abs(sum - 1.0) > 1e-12)
    throw config_error("cloud: weights sum to " + textio::fmt_double(sum) +
                       ", expected 1 within 1e-12");
}

WeightedPointCloud WeightedPointCloud::equal_weights(
    std::vector<SpherePoint> pts, std::string generator_note) {
  if (pts.empty()) throw config_error("cloud: no points supplied");
  WeightedPointCloud cloud;
  const double w = 1.0 / static_cast<double>(pts.size());
  cloud.weights.assign(pts.size(), w);
  cloud.points = std::move(pts);
  cloud.generator = std::move(generator_note);
  return cloud;
}

void save_cloud(const std::string& path, const WeightedPointCloud& cloud) {
  cloud.validate();
  std::ofstream out(path);
  if (!out) throw config_error("cannot write file: " + path);
  out << "cloud v1 " << cloud.points.size() << " "
      << sanitize_note(cloud.generator) << "\n";
  for (std::size_t k = 0; k < cloud.points.size(); ++k) {
    const SpherePoint& p = cloud.points[k];
    const Complex v = p.at_infinity ? Complex(0.0, 0.0) : p.value;
    out << textio::fmt_double(v.real()) << " " << textio::fmt_double(v.imag())
        << " " << (p.at_infinity ? 1 : 0) << " "
        << textio::fmt_double(cloud.weights[k]) << "\n";
  }
  if (!out) throw config_error("write failed: " + path);
}

std::uint64_t cloud_digest(const WeightedPointCloud& cloud) {
  std::uint64_t h = textio::fnv1a64(std::to_string(cloud.points.size()));
  for (std::size_t k = 0; k < cloud.points.size(); ++k) {
    const SpherePoint& p = cloud.points[k];
    const Complex v = p.at_infinity ? Complex(0.0, 0.0) : p.value;
    std::string row = textio::fmt_double(v.real());
    row += ' ';
    row += textio::fmt_double(v.imag());
    row += ' ';
    row += p.at_infinity ? '1' : '0';
    row += ' ';
    row += textio::fmt_double(cloud.weights[k]);
    row += '\n';
    h = textio::fnv1a64(row, h);
  }
  return h;
}

WeightedPointCloud load_cloud(const std::string& path) {
  const auto lines = textio::read_lines(path);
  if (lines.empty()) throw config_error(path + ": empty file");
  const auto& head = lines[0];
  if (head.tokens.size() < 3 || head.tokens[0] != "cloud" ||
      head.tokens[1] != "v1")
    throw config_error(textio::loc(path, head.number) +
                       ": expected header 'cloud v1 <count> <note>'");
  const long long n =
      textio::parse_int(head.tokens[2], textio::loc(path, head.number));
  if (n <= 0)
    throw config_error(textio::loc(path, head.number) +
                       ": point count must be positive");
  WeightedPointCloud cloud;
  for (std::size_t t = 3; t < head.tokens.size(); ++t) {
    if (t > 3) cloud.generator += ' ';
    cloud.generator += head.tokens[t];
  }
  if (lines.size() - 1 != static_cast<std::size_t>(n))
    throw config_error(path + ": header announces " + std::to_string(n) +
                       " points but file has " +
                       std::to_string(lines.size() - 1) + " rows");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& row = lines[i];
    const std::string where = textio::loc(path, row.number);
    if (row.tokens.size() != 4)
      throw config_error(where + ": expected 're im at_infinity weight'");
    const double re = textio::parse_double(row.tokens[0], where);
    const double im = textio::parse_double(row.tokens[1], where);
    const long long flag = textio::parse_int(row.tokens[2], where);
    if (flag != 0 && flag != 1)
      throw config_error(where + ": at_infinity flag must be 0 or 1");
    cloud.points.push_back(flag ? SpherePoint::infinity()
                                : SpherePoint(re, im));
    cloud.weights.push_back(textio::parse_double(row.tokens[3], where));
  }
  cloud.validate();
  return cloud;
}

// ---------------------------------------------------------------------------
// TestDictionary

TestDictionary::TestDictionary() {
  exponents_.push_back({0, 0, 0});
  for (int total = 1; total <= 3; ++total)
    for (int a = total; a >= 0; --a)
      for (int b = total - a; b >= 0; --b)
        exponents_.push_back({a, b, total - a - b});
}

std::string TestDictionary::name(std::size_t k) const {
  const auto [a, b, c] = exponents_[k];
  if (a + b + c == 0) return "1";
  std::ostringstream out;
  const int e[3] = {a, b, c};
  bool first = true;
  for (int i = 0; i < 3; ++i) {
    if (e[i] == 0) continue;
    if (!first) out << "*";
    out << "x" << (i + 1);
    if (e[i] > 1) out << "^" << e[i];
    first = false;
  }
  return out.str();
}

std::array<double, 3> TestDictionary::embed(const SpherePoint& z) {
  if (z.at_infinity) return {0.0, 0.0, 1.0};
  const double re = z.value.real();
  const double im = z.value.imag();
  const double s = std::max(std::abs(re), std::abs(im));
  if (s <= 1.0) {
    const double n = re * re + im * im;
    const double den = 1.0 + n;
    return {2.0 * re / den, 2.0 * im / den, (n - 1.0) / den};
  }
  // Rescaled form: never squares s, so arbitrarily large inputs are safe.
  const double inv = 1.0 / s;
  const double vr = re * inv;
  const double vi = im * inv;
  const double m = vr * vr + vi * vi;  // in [1, 2]
  const double den = inv * inv + m;
  return {2.0 * vr * inv / den, 2.0 * vi * inv / den,
          (m - inv * inv) / den};
}

double TestDictionary::eval(std::size_t k, const SpherePoint& z) const {
  const auto x = embed(z);
  const auto [a, b, c] = exponents_[k];
  double v = 1.0;
  for (int i = 0; i < a; ++i) v *= x[0];
  for (int i = 0; i < b; ++i) v *= x[1];
  for (int i = 0; i < c; ++i) v *= x[2];
  return v;
}

void TestDictionary::eval_all(const SpherePoint& z,
                              std::vector<double>& out) const {
  const auto x = embed(z);
  double p1[4], p2[4], p3[4];
  p1[0] = p2[0] = p3[0] = 1.0;
  for (int i = 1; i <= 3; ++i) {
    p1[i] = p1[i - 1] * x[0];
    p2[i] = p2[i - 1] * x[1];
    p3[i] = p3[i - 1] * x[2];
  }
  out.resize(exponents_.size());
  for (std::size_t k = 0; k < exponents_.size(); ++k) {
    const auto [a, b, c] = exponents_[k];
    out[k] = p1[a] * p2[b] * p3[c];
  }
}

// ---------------------------------------------------------------------------
// Chunked deterministic sampling

void parallel_chunks(int n_chunks, int threads,
                     const std::function<void(int)>& body) {
  if (n_chunks <= 0) return;
  const int workers = std::max(1, std::min(threads, n_chunks));
  if (workers == 1) {
    for (int c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int c = next.fetch_add(1);
        if (c >= n_chunks) return;
        try {
          body(c);
        } catch (...) {
          {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
          }
          next.store(n_chunks);  // drain remaining work
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Pullback estimators

WeightedPointCloud pullback_dirac_exact(const PolyCorrespondence& corr,
                                        const SpherePoint& z, int n,
                                        std::size_t cap) {
  auto leaves = iterate_backward(corr, z, n, cap);
  std::ostringstream note;
  note << "exact-pullback corr=" << corr.label() << " n=" << n;
  return WeightedPointCloud::equal_weights(std::move(leaves), note.str());
}

WeightedPointCloud pullback_dirac_sampled(const PolyCorrespondence& corr,
                                          const SpherePoint& z, int n,
                                          std::size_t samples,
                                          const SampleParams& params) {
  if (samples == 0) throw config_error("sampled pullback: samples must be >= 1");
  if (n < 0) throw config_error("sampled pullback: negative depth");
  const auto cum = walkers::component_cumulative(corr);
  std::vector<SpherePoint> out(samples);
  const int n_chunks =
      static_cast<int>((samples + kChunkSize - 1) / kChunkSize);
  parallel_chunks(n_chunks, params.threads, [&](int c) {
    RandomStream rs(params.seed, static_cast<std::uint64_t>(c), kTagWalk);
    const std::size_t lo = static_cast<std::size_t>(c) * kChunkSize;
    const std::size_t hi = std::min(samples, lo + kChunkSize);
    for (std::size_t i = lo; i < hi; ++i)
      out[i] = walkers::run_walk(corr, z, n, cum, rs, params.retry_cap);
  });
  std::ostringstream note;
  note << "sampled-pullback corr=" << corr.label() << " n=" << n
       << " samples=" << samples << " seed=" << params.seed;
  return WeightedPointCloud::equal_weights(std::move(out), note.str());
}

namespace {

// Heuristically exceptional starts: common fixed points of every
// component, plus 0 and infinity.  Diagnostic only - the genuinely
// exceptional set is a pluripolar set we cannot compute.
std::vector<SpherePoint> exceptional_candidates(
    const PolyCorrespondence& corr) {
  std::vector<SpherePoint> out{SpherePoint(0.0, 0.0), SpherePoint::infinity()};

  // Diagonal restriction P(z, z) of each component.
  std::vector<ComplexPolynomial> diag;
  for (const auto& comp : corr.components()) {
    const auto& p = comp.poly;
    ComplexPolynomial q;
    q.coefficients.assign(static_cast<std::size_t>(p.zn + p.wn) + 1,
                          Complex(0.0, 0.0));
    for (int i = 0; i <= p.zn; ++i)
      for (int j = 0; j <= p.wn; ++j)
        q.coefficients[static_cast<std::size_t>(i + j)] += p.at(i, j);
    diag.push_back(std::move(q));
  }
  if (diag[0].identically_zero()) return out;  // fixes everything; skip
  std::vector<SpherePoint> roots;
  try {
    roots = poly_roots(diag[0]);
  } catch (const numeric_error&) {
    return out;  // diagnostics must never block a run
  }
  for (const auto& r : roots) {
    bool common = true;
    for (std::size_t j = 1; j < diag.size() && common; ++j) {
      if (diag[j].identically_zero()) continue;
      if (r.at_infinity) {
        // At infinity the component fixes it iff its diagonal degree
        // drops; approximate via the trimmed leading coefficient.
        common = std::abs(diag[j].coefficients.back()) <=
                 1e-9 * diag[j].max_coefficient_magnitude();
      } else {
        common = std::abs(diag[j].eval(r.value)) <=
                 1e-9 * diag[j].max_coefficient_magnitude() *
                     std::pow(std::max(1.0, std::abs(r.value)),
                              static_cast<double>(diag[j].nominal_degree()));
      }
    }
    if (common) out.push_back(r);
  }
  return out;
}

}  // namespace

DsEstimate estimate_ds_measure(const PolyCorrespondence& corr,
                               const SpherePoint& start, int depth,
                               std::size_t samples,
                               const SampleParams& params) {
  DsEstimate est;
  for (const auto& bad : exceptional_candidates(corr)) {
    if (chordal_close(start, bad, 1e-8)) {
      std::ostringstream msg;
      msg << "start point ";
      if (start.at_infinity)
        msg << "infinity";
      else
        msg << start.value;
      msg << " is heuristically exceptional; equidistribution toward the "
             "pullback-invariant measure may fail from here";
      est.warnings.push_back(msg.str());
      break;
    }
  }
  est.cloud = pullback_dirac_sampled(corr, start, depth, samples, params);
  est.cloud.generator = "ds-estimate " + est.cloud.generator;
  est.invariance_residual = invariance_residual(corr, est.cloud,
                                                TestDictionary());
  return est;
}

WeightedPointCloud sample_annulus_measure(std::size_t samples,
                                          const SampleParams& params) {
  if (samples == 0) throw config_error("annulus sampler: samples must be >= 1");
  std::vector<SpherePoint> out(samples);
  const int n_chunks =
      static_cast<int>((samples + kChunkSize - 1) / kChunkSize);
  parallel_chunks(n_chunks, params.threads, [&](int c) {
    RandomStream rs(params.seed, static_cast<std::uint64_t>(c), kTagAnnulus);
    const std::size_t lo = static_cast<std::size_t>(c) * kChunkSize;
    const std::size_t hi = std::min(samples, lo + kChunkSize);
    for (std::size_t i = lo; i < hi; ++i) {
      const double x = rs.uniform(0.0, std::numbers::ln2);
      const double theta = rs.uniform(0.0, 2.0 * std::numbers::pi);
      out[i] = SpherePoint(std::polar(std::exp(x), theta));
    }
  });
  std::ostringstream note;
  note << "annulus samples=" << samples << " seed=" << params.seed;
  return WeightedPointCloud::equal_weights(std::move(out), note.str());
}

// ---------------------------------------------------------------------------
// Functionals

double invariance_residual(const PolyCorrespondence& corr,
                           const WeightedPointCloud& cloud,
                           const TestDictionary& dict) {
  cloud.validate();
  const double d = static_cast<double>(corr.topological_degree());
  std::vector<double> pulled(dict.size(), 0.0);
  std::vector<double> direct(dict.size(), 0.0);
  std::vector<double> vals;
  for (std::size_t k = 0; k < cloud.points.size(); ++k) {
    const double w = cloud.weights[k];
    dict.eval_all(cloud.points[k], vals);
    for (std::size_t m = 0; m < vals.size(); ++m) direct[m] += w * vals[m];
    for (const auto& pre : backward_image(corr, cloud.points[k])) {
      dict.eval_all(pre, vals);
      const double scale = w / d;
      for (std::size_t m = 0; m < vals.size(); ++m)
        pulled[m] += scale * vals[m];
    }
  }
  double worst = 0.0;
  for (std::size_t m = 0; m < pulled.size(); ++m)
    worst = std::max(worst, std::abs(pulled[m] - direct[m]));
  return worst;
}

double weak_star_discrepancy(const WeightedPointCloud& a,
                             const WeightedPointCloud& b,
                             const TestDictionary& dict) {
  a.validate();
  b.validate();
  std::vector<double> ma(dict.size(), 0.0), mb(dict.size(), 0.0);
  std::vector<double> vals;
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    dict.eval_all(a.points[k], vals);
    for (std::size_t m = 0; m < vals.size(); ++m)
      ma[m] += a.weights[k] * vals[m];
  }
  for (std::size_t k = 0; k < b.points.size(); ++k) {
    dict.eval_all(b.points[k], vals);
    for (std::size_t m = 0; m < vals.size(); ++m)
      mb[m] += b.weights[k] * vals[m];
  }
  double worst = 0.0;
  for (std::size_t m = 0; m < ma.size(); ++m)
    worst = std::max(worst, std::abs(ma[m] - mb[m]));
  return worst;
}

double measure_of_set(const WeightedPointCloud& cloud,
                      const SetPredicate& in_set) {
  cloud.validate();
  double total = 0.0, comp = 0.0;
  for (std::size_t k = 0; k < cloud.points.size(); ++k) {
    if (!in_set(cloud.points[k])) continue;
    const double y = cloud.weights[k] - comp;
    const double t = total + y;
    comp = (t - total) - y;
    total = t;
  }
  return total;
}

namespace {

bool membership_dfs(const PolyCorrespondence& corr, const SpherePoint& z,
                    int j, const SetPredicate& in_set) {
  if (j == 0) return in_set(z);
  for (const auto& pre : backward_image(corr, z))
    if (membership_dfs(corr, pre, j - 1, in_set)) return true;
  return false;
}

}  // namespace

bool forward_set_membership(const PolyCorrespondence& corr,
                            const SpherePoint& z, int j,
                            const SetPredicate& in_set, std::size_t cap) {
  if (j < 0) throw config_error("forward_set_membership: negative iterate");
  const auto d = static_cast<std::size_t>(corr.topological_degree());
  std::size_t tree = 1;
  for (int i = 0; i < j; ++i) {
    if (d > 1 && tree > cap / d) {
      std::ostringstream msg;
      msg << "tree too large: d^j = " << corr.topological_degree() << "^" << j
          << " exceeds cap " << cap;
      throw cap_exceeded(msg.str());
    }
    tree *= d;
  }
  return membership_dfs(corr, z, j, in_set);
}

}  // namespace corrlab

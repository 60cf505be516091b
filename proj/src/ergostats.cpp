#include "corrlab/ergostats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "corrlab/errors.hpp"
#include "corrlab/rng.hpp"
#include "textio.hpp"
#include "walkers.hpp"

namespace corrlab {

namespace {

// Stream tags (disjoint from the measures-module tags).
constexpr std::uint64_t kTagKoopman = 0x406f;
constexpr std::uint64_t kTagProduct = 0xfab2;

// Points handled per parallel work unit when sweeping a cloud.
constexpr std::size_t kPointChunk = 64;

bool exact_tree_fits(std::uint64_t d, int n, std::size_t cap) {
  std::uint64_t t = 1;
  for (int i = 0; i < n; ++i) {
    if (d > 1 && t > cap / d) return false;
    t *= d;
  }
  return t <= cap;
}

// Level-by-level means of phi over the exact backward tree: u[j] is the
// mean over the d^j nodes at depth j (division at the end keeps constants
// exactly fixed).
std::vector<double> exact_level_means(const PolyCorrespondence& corr,
                                      const RealFn& phi, const SpherePoint& z,
                                      int n) {
  std::vector<double> u(static_cast<std::size_t>(n) + 1);
  std::vector<SpherePoint> frontier{z};
  for (int level = 0;; ++level) {
    double sum = 0.0;
    for (const auto& p : frontier) sum += phi(p);
    u[static_cast<std::size_t>(level)] =
        sum / static_cast<double>(frontier.size());
    if (level == n) break;
    std::vector<SpherePoint> next;
    next.reserve(frontier.size() *
                 static_cast<std::size_t>(corr.topological_degree()));
    for (const auto& p : frontier) {
      const auto pre = backward_image(corr, p);
      next.insert(next.end(), pre.begin(), pre.end());
    }
    frontier = std::move(next);
  }
  return u;
}

struct LevelStats {
  std::vector<double> mean;
  std::vector<double> se;
};

// Shared-walk ensemble: one set of backward walks yields unbiased
// estimates of (U^j phi)(z) for every level j <= n at once.
LevelStats sampled_level_stats(const PolyCorrespondence& corr,
                               const RealFn& phi, const SpherePoint& z, int n,
                               int walks, RandomStream& rs, int retry_cap) {
  const std::size_t len = static_cast<std::size_t>(n) + 1;
  std::vector<double> acc(len, 0.0), acc2(len, 0.0), vals(len);
  const auto cum = walkers::component_cumulative(corr);
  for (int s = 0; s < walks; ++s) {
    for (int attempt = 0;; ++attempt) {
      try {
        SpherePoint cur = z;
        vals[0] = phi(cur);
        for (int j = 1; j <= n; ++j) {
          cur = walkers::walk_step(corr, cur, cum, rs);
          vals[static_cast<std::size_t>(j)] = phi(cur);
        }
        break;
      } catch (const numeric_error& e) {
        if (attempt >= retry_cap)
          throw numeric_error("koopman walk gave up after " +
                              std::to_string(retry_cap) +
                              " retries: " + e.what());
      }
    }
    for (std::size_t j = 0; j < len; ++j) {
      acc[j] += vals[j];
      acc2[j] += vals[j] * vals[j];
    }
  }
  LevelStats out;
  out.mean.resize(len);
  out.se.resize(len);
  const double w = static_cast<double>(walks);
  for (std::size_t j = 0; j < len; ++j) {
    out.mean[j] = acc[j] / w;
    const double var =
        walks > 1
            ? std::max(0.0, (acc2[j] - w * out.mean[j] * out.mean[j]) /
                                (w - 1.0))
            : 0.0;
    out.se[j] = std::sqrt(var / w);
  }
  return out;
}

double kahan_total(const std::vector<double>& xs) {
  double s = 0.0, c = 0.0;
  for (const double x : xs) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Koopman operator

double koopman_apply(const PolyCorrespondence& corr, const RealFn& phi,
                     const SpherePoint& z) {
  double sum = 0.0;
  const auto pre = backward_image(corr, z);
  for (const auto& p : pre) sum += phi(p);
  return sum / static_cast<double>(pre.size());
}

KoopmanResult koopman_iterate(const PolyCorrespondence& corr,
                              const RealFn& phi, const SpherePoint& z, int n,
                              const KoopmanOptions& opt) {
  if (n < 0) throw config_error("koopman iterate: negative power");
  const auto d = static_cast<std::uint64_t>(corr.topological_degree());
  if (exact_tree_fits(d, n, opt.cap)) {
    const auto u = exact_level_means(corr, phi, z, n);
    return {u.back(), false, 0.0};
  }
  if (!opt.allow_sampled) {
    std::ostringstream msg;
    msg << "tree too large: d^n = " << d << "^" << n << " exceeds cap "
        << opt.cap << " and sampling is disabled";
    throw cap_exceeded(msg.str());
  }
  RandomStream rs(opt.sample.seed, opt.stream_id, kTagKoopman);
  const auto stats = sampled_level_stats(corr, phi, z, n, opt.walks, rs,
                                         opt.sample.retry_cap);
  return {stats.mean.back(), true, stats.se.back()};
}

double correlation(const PolyCorrespondence& corr,
                   const WeightedPointCloud& mu, const RealFn& phi,
                   const RealFn& psi, int n, const KoopmanOptions& opt) {
  mu.validate();
  double acc = 0.0;
  KoopmanOptions point_opt = opt;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    point_opt.stream_id = static_cast<std::uint64_t>(k);
    acc += mu.weights[k] *
           koopman_iterate(corr, phi, mu.points[k], n, point_opt).value *
           psi(mu.points[k]);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Sequence utilities

std::vector<double> cesaro(const std::vector<double>& seq) {
  if (seq.empty()) throw config_error("cesaro: empty sequence");
  std::vector<double> out(seq.size());
  double s = 0.0, c = 0.0;
  for (std::size_t n = 0; n < seq.size(); ++n) {
    const double y = seq[n] - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
    out[n] = s / static_cast<double>(n + 1);
  }
  return out;
}

DensityZeroVerdict density_zero_filter(const std::vector<double>& seq,
                                       double target, double window_tol) {
  if (seq.size() < 20)
    throw config_error(
        "density-zero filter: sequence too short (need at least 20 terms)");
  if (!(window_tol > 0.0))
    throw config_error("density-zero filter: window tolerance must be > 0");

  const std::size_t n = seq.size();
  DensityZeroVerdict out;
  std::vector<double> density(n);
  double comp_sum = 0.0, comp_dev = 0.0;
  std::size_t comp_count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dev = std::abs(seq[j] - target);
    if (dev > window_tol) {
      out.excluded.push_back(static_cast<int>(j));
    } else {
      comp_sum += seq[j];
      comp_dev += dev;
      ++comp_count;
    }
    density[j] = static_cast<double>(out.excluded.size()) /
                 static_cast<double>(j + 1);
  }
  out.excluded_density = density.back();
  if (comp_count == 0) {
    out.filtered_limit = target;
    out.complement_dev_mean = std::numeric_limits<double>::infinity();
    out.weak_mixing_consistent = false;
    return out;
  }
  out.filtered_limit = comp_sum / static_cast<double>(comp_count);
  out.complement_dev_mean = comp_dev / static_cast<double>(comp_count);

  // Final third of the horizon: the exclusion density must sit below 0.2
  // and must not be trending upward (first half vs second half means).
  const std::size_t third_start = (2 * n) / 3;
  double level_max = 0.0;
  for (std::size_t j = third_start; j < n; ++j)
    level_max = std::max(level_max, density[j]);
  const std::size_t mid = third_start + (n - third_start) / 2;
  double first = 0.0, second = 0.0;
  for (std::size_t j = third_start; j < mid; ++j) first += density[j];
  for (std::size_t j = mid; j < n; ++j) second += density[j];
  first /= static_cast<double>(std::max<std::size_t>(1, mid - third_start));
  second /= static_cast<double>(std::max<std::size_t>(1, n - mid));

  out.weak_mixing_consistent =
      level_max <= 0.2 && second <= first + 0.02 &&
      out.complement_dev_mean <= window_tol + 1e-12;
  return out;
}

// ---------------------------------------------------------------------------
// Correlation reports

CorrelationReport correlation_report(const PolyCorrespondence& corr,
                                     const WeightedPointCloud& mu,
                                     const RealFn& phi, const RealFn& psi,
                                     int n_max, const ReportOptions& opt) {
  if (n_max < 1)
    throw config_error("correlation report: horizon must be >= 1");
  mu.validate();
  const std::size_t n_pts = mu.size();
  const std::size_t len = static_cast<std::size_t>(n_max) + 1;
  const auto d = static_cast<std::uint64_t>(corr.topological_degree());
  const bool exact = exact_tree_fits(d, n_max, opt.cap);

  std::vector<double> u(n_pts * len), se;
  if (!exact) se.assign(n_pts * len, 0.0);
  const int n_chunks =
      static_cast<int>((n_pts + kPointChunk - 1) / kPointChunk);
  parallel_chunks(n_chunks, opt.sample.threads, [&](int c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kPointChunk;
    const std::size_t hi = std::min(n_pts, lo + kPointChunk);
    for (std::size_t k = lo; k < hi; ++k) {
      if (exact) {
        const auto levels = exact_level_means(corr, phi, mu.points[k], n_max);
        std::copy(levels.begin(), levels.end(), u.begin() + k * len);
      } else {
        RandomStream rs(opt.sample.seed, static_cast<std::uint64_t>(k),
                        kTagKoopman);
        const auto stats =
            sampled_level_stats(corr, phi, mu.points[k], n_max, opt.walks, rs,
                                opt.sample.retry_cap);
        std::copy(stats.mean.begin(), stats.mean.end(), u.begin() + k * len);
        std::copy(stats.se.begin(), stats.se.end(), se.begin() + k * len);
      }
    }
  });

  std::vector<double> psi_vals(n_pts);
  for (std::size_t k = 0; k < n_pts; ++k) psi_vals[k] = psi(mu.points[k]);

  CorrelationReport report;
  report.series.resize(len);
  if (!exact) report.standard_errors.resize(len);
  double int_phi = 0.0, int_psi = 0.0;
  for (std::size_t k = 0; k < n_pts; ++k) {
    int_phi += mu.weights[k] * u[k * len];  // level 0 is phi itself
    int_psi += mu.weights[k] * psi_vals[k];
  }
  report.target = int_phi * int_psi;
  for (std::size_t j = 0; j < len; ++j) {
    double acc = 0.0, var = 0.0;
    for (std::size_t k = 0; k < n_pts; ++k) {
      const double scale = mu.weights[k] * psi_vals[k];
      acc += scale * u[k * len + j];
      if (!exact) {
        const double term = scale * se[k * len + j];
        var += term * term;
      }
    }
    report.series[j] = acc;
    if (!exact) report.standard_errors[j] = std::sqrt(var);
  }

  report.cesaro_means = cesaro(report.series);
  std::vector<double> devs(len);
  for (std::size_t j = 0; j < len; ++j)
    devs[j] = std::abs(report.series[j] - report.target);
  report.cesaro_abs_devs = cesaro(devs);

  if (opt.window_tol > 0.0) {
    report.window_tol = opt.window_tol;
  } else {
    double se_mean = 0.0;
    if (!exact) se_mean = kahan_total(report.standard_errors) /
                          static_cast<double>(len);
    report.window_tol = std::max(0.01, 3.0 * se_mean);
  }
  if (len >= 20) {
    report.density_zero =
        density_zero_filter(report.series, report.target, report.window_tol);
    report.density_zero_evaluated = true;
  }

  report.label = corr.label();
  report.horizon = n_max;
  report.sampled = !exact;
  report.seed = opt.sample.seed;
  report.cap = opt.cap;
  report.walks = opt.walks;
  report.mu_digest = cloud_digest(mu);
  return report;
}

bool hierarchy_signatures_consistent(const CorrelationReport& report,
                                     double tol) {
  const double slack = 1e-12;
  double worst = 0.0;
  for (std::size_t n = 0; n < report.series.size(); ++n) {
    // Unconditional triangle inequality between the two Cesaro forms.
    if (std::abs(report.cesaro_means[n] - report.target) >
        report.cesaro_abs_devs[n] + slack)
      return false;
    if (report.cesaro_abs_devs[n] < -slack) return false;
    worst = std::max(worst, std::abs(report.series[n] - report.target));
  }
  if (worst <= tol) {
    // Mixing within tol forces the weak-mixing and ergodicity statistics.
    if (report.cesaro_abs_devs.back() > tol + slack) return false;
    if (std::abs(report.cesaro_means.back() - report.target) > tol + slack)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Birkhoff averages and contraction

std::vector<double> birkhoff_average(const PolyCorrespondence& corr,
                                     const RealFn& phi, const SpherePoint& z,
                                     int n, const KoopmanOptions& opt) {
  if (n < 1) throw config_error("birkhoff average: need at least one term");
  const auto d = static_cast<std::uint64_t>(corr.topological_degree());
  std::vector<double> levels;
  if (exact_tree_fits(d, n - 1, opt.cap)) {
    levels = exact_level_means(corr, phi, z, n - 1);
  } else {
    if (!opt.allow_sampled) {
      std::ostringstream msg;
      msg << "tree too large: d^n = " << d << "^" << (n - 1)
          << " exceeds cap " << opt.cap << " and sampling is disabled";
      throw cap_exceeded(msg.str());
    }
    RandomStream rs(opt.sample.seed, opt.stream_id, kTagKoopman);
    levels = sampled_level_stats(corr, phi, z, n - 1, opt.walks, rs,
                                 opt.sample.retry_cap)
                 .mean;
  }
  return cesaro(levels);
}

std::pair<double, double> contraction_check(const PolyCorrespondence& corr,
                                            const WeightedPointCloud& mu,
                                            const RealFn& phi, double q) {
  if (!(q >= 1.0)) throw config_error("contraction check: need q >= 1");
  mu.validate();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    lhs += mu.weights[k] *
           std::pow(std::abs(koopman_apply(corr, phi, mu.points[k])), q);
    rhs += mu.weights[k] * std::pow(std::abs(phi(mu.points[k])), q);
  }
  return {std::pow(lhs, 1.0 / q), std::pow(rhs, 1.0 / q)};
}

// ---------------------------------------------------------------------------
// Product-side correlations

std::vector<double> product_correlation_series(
    const PolyCorrespondence& corr1, const WeightedPointCloud& mu1,
    const RealFn& phi1, const RealFn& psi1, const PolyCorrespondence& corr2,
    const WeightedPointCloud& mu2, const RealFn& phi2, const RealFn& psi2,
    int n_max, const ReportOptions& opt) {
  if (n_max < 1)
    throw config_error("product correlation: horizon must be >= 1");
  mu1.validate();
  mu2.validate();
  if (mu1.size() != mu2.size())
    throw config_error(
        "product correlation: factor clouds must have equal size for zip "
        "pairing");

  const std::size_t n_pts = mu1.size();
  const std::size_t len = static_cast<std::size_t>(n_max) + 1;
  std::vector<double> pair_weight(n_pts);
  for (std::size_t k = 0; k < n_pts; ++k)
    pair_weight[k] = mu1.weights[k] * mu2.weights[k];
  const double norm = kahan_total(pair_weight);
  if (!(norm > 0.0))
    throw config_error("product correlation: zipped weights vanish");

  const auto cum1 = walkers::component_cumulative(corr1);
  const auto cum2 = walkers::component_cumulative(corr2);
  std::vector<double> u(n_pts * len, 0.0);
  const int n_chunks =
      static_cast<int>((n_pts + kPointChunk - 1) / kPointChunk);
  parallel_chunks(n_chunks, opt.sample.threads, [&](int c) {
    std::vector<double> vals(len);
    const std::size_t lo = static_cast<std::size_t>(c) * kPointChunk;
    const std::size_t hi = std::min(n_pts, lo + kPointChunk);
    for (std::size_t k = lo; k < hi; ++k) {
      RandomStream rs(opt.sample.seed, static_cast<std::uint64_t>(k),
                      kTagProduct);
      for (int s = 0; s < opt.walks; ++s) {
        for (int attempt = 0;; ++attempt) {
          try {
            SpherePoint left = mu1.points[k];
            SpherePoint right = mu2.points[k];
            vals[0] = phi1(left) * phi2(right);
            for (int j = 1; j <= n_max; ++j) {
              left = walkers::walk_step(corr1, left, cum1, rs);
              right = walkers::walk_step(corr2, right, cum2, rs);
              vals[static_cast<std::size_t>(j)] = phi1(left) * phi2(right);
            }
            break;
          } catch (const numeric_error& e) {
            if (attempt >= opt.sample.retry_cap)
              throw numeric_error("product walk gave up after " +
                                  std::to_string(opt.sample.retry_cap) +
                                  " retries: " + e.what());
          }
        }
        for (std::size_t j = 0; j < len; ++j) u[k * len + j] += vals[j];
      }
    }
  });

  std::vector<double> series(len, 0.0);
  const double walk_scale = 1.0 / static_cast<double>(opt.walks);
  for (std::size_t k = 0; k < n_pts; ++k) {
    const double scale = (pair_weight[k] / norm) * psi1(mu1.points[k]) *
                         psi2(mu2.points[k]) * walk_scale;
    for (std::size_t j = 0; j < len; ++j) series[j] += scale * u[k * len + j];
  }
  return series;
}

double product_correlation_factorization_check(
    const CorrelationReport& left, const CorrelationReport& right,
    const std::vector<double>& product_series) {
  if (left.series.size() != right.series.size() ||
      left.series.size() != product_series.size())
    throw config_error(
        "factorization check: mismatched horizons between factor reports "
        "and product series");
  double worst = 0.0;
  for (std::size_t n = 0; n < product_series.size(); ++n)
    worst = std::max(worst, std::abs(product_series[n] -
                                     left.series[n] * right.series[n]));
  return worst;
}

// ---------------------------------------------------------------------------
// Report files

void save_report(const std::string& path, const CorrelationReport& r) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write file: " + path);
  out << "report v1\n";
  out << "label " << r.label << "\n";
  out << "horizon " << r.horizon << "\n";
  out << "target " << textio::fmt_double(r.target) << "\n";
  out << "seed " << r.seed << "\n";
  out << "cap " << r.cap << "\n";
  out << "walks " << r.walks << "\n";
  out << "sampled " << (r.sampled ? 1 : 0) << "\n";
  out << "mu_digest " << r.mu_digest << "\n";
  out << "window_tol " << textio::fmt_double(r.window_tol) << "\n";
  for (std::size_t j = 0; j < r.series.size(); ++j)
    out << "series " << j << " " << textio::fmt_double(r.series[j]) << "\n";
  for (std::size_t j = 0; j < r.standard_errors.size(); ++j)
    out << "stderr " << j << " " << textio::fmt_double(r.standard_errors[j])
        << "\n";
  for (std::size_t j = 0; j < r.cesaro_means.size(); ++j)
    out << "cesaro_mean " << j << " " << textio::fmt_double(r.cesaro_means[j])
        << "\n";
  for (std::size_t j = 0; j < r.cesaro_abs_devs.size(); ++j)
    out << "cesaro_absdev " << j << " "
        << textio::fmt_double(r.cesaro_abs_devs[j]) << "\n";
  out << "dz_evaluated " << (r.density_zero_evaluated ? 1 : 0) << "\n";
  if (r.density_zero_evaluated) {
    const auto& dz = r.density_zero;
    out << "dz_verdict "
        << (dz.weak_mixing_consistent ? "consistent" : "inconsistent")
        << "\n";
    out << "dz_filtered_limit " << textio::fmt_double(dz.filtered_limit)
        << "\n";
    out << "dz_complement_dev " << textio::fmt_double(dz.complement_dev_mean)
        << "\n";
    out << "dz_density " << textio::fmt_double(dz.excluded_density) << "\n";
    out << "dz_excluded " << dz.excluded.size();
    for (const int j : dz.excluded) out << " " << j;
    out << "\n";
  }
  out << "end\n";
  if (!out) throw config_error("write failed: " + path);
}

namespace {

const textio::Line& expect_line(const std::vector<textio::Line>& lines,
                                std::size_t idx, const std::string& key,
                                const std::string& path) {
  if (idx >= lines.size())
    throw config_error(path + ": truncated report, expected '" + key + "'");
  const auto& line = lines[idx];
  if (line.tokens[0] != key)
    throw config_error(textio::loc(path, line.number) + ": expected '" + key +
                       "', got '" + line.tokens[0] + "'");
  return line;
}

double keyed_double(const textio::Line& line, const std::string& path) {
  if (line.tokens.size() != 2)
    throw config_error(textio::loc(path, line.number) + ": expected '" +
                       line.tokens[0] + " <value>'");
  return textio::parse_double(line.tokens[1], textio::loc(path, line.number));
}

std::vector<double> indexed_block(const std::vector<textio::Line>& lines,
                                  std::size_t& idx, const std::string& key,
                                  std::size_t count, const std::string& path) {
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    const auto& line = expect_line(lines, idx++, key, path);
    const std::string where = textio::loc(path, line.number);
    if (line.tokens.size() != 3)
      throw config_error(where + ": expected '" + key + " <index> <value>'");
    if (textio::parse_int(line.tokens[1], where) != static_cast<long long>(j))
      throw config_error(where + ": expected index " + std::to_string(j));
    out[j] = textio::parse_double(line.tokens[2], where);
  }
  return out;
}

}  // namespace

CorrelationReport load_report(const std::string& path) {
  const auto lines = textio::read_lines(path);
  if (lines.empty()) throw config_error(path + ": empty file");
  if (lines[0].tokens != std::vector<std::string>{"report", "v1"})
    throw config_error(textio::loc(path, lines[0].number) +
                       ": expected header 'report v1'");
  std::size_t idx = 1;
  CorrelationReport r;

  const auto& label_line = expect_line(lines, idx++, "label", path);
  for (std::size_t t = 1; t < label_line.tokens.size(); ++t) {
    if (t > 1) r.label += ' ';
    r.label += label_line.tokens[t];
  }
  {
    const auto& line = expect_line(lines, idx++, "horizon", path);
    r.horizon = static_cast<int>(keyed_double(line, path));
    if (r.horizon < 1)
      throw config_error(textio::loc(path, line.number) +
                         ": horizon must be >= 1");
  }
  r.target = keyed_double(expect_line(lines, idx++, "target", path), path);
  {
    const auto& line = expect_line(lines, idx++, "seed", path);
    if (line.tokens.size() != 2)
      throw config_error(textio::loc(path, line.number) + ": expected value");
    r.seed = std::strtoull(line.tokens[1].c_str(), nullptr, 10);
  }
  r.cap = static_cast<std::size_t>(
      keyed_double(expect_line(lines, idx++, "cap", path), path));
  r.walks = static_cast<int>(
      keyed_double(expect_line(lines, idx++, "walks", path), path));
  r.sampled =
      keyed_double(expect_line(lines, idx++, "sampled", path), path) != 0.0;
  {
    const auto& line = expect_line(lines, idx++, "mu_digest", path);
    if (line.tokens.size() != 2)
      throw config_error(textio::loc(path, line.number) + ": expected value");
    r.mu_digest = std::strtoull(line.tokens[1].c_str(), nullptr, 10);
  }
  r.window_tol =
      keyed_double(expect_line(lines, idx++, "window_tol", path), path);

  const std::size_t len = static_cast<std::size_t>(r.horizon) + 1;
  r.series = indexed_block(lines, idx, "series", len, path);
  if (r.sampled)
    r.standard_errors = indexed_block(lines, idx, "stderr", len, path);
  r.cesaro_means = indexed_block(lines, idx, "cesaro_mean", len, path);
  r.cesaro_abs_devs = indexed_block(lines, idx, "cesaro_absdev", len, path);

  r.density_zero_evaluated =
      keyed_double(expect_line(lines, idx++, "dz_evaluated", path), path) !=
      0.0;
  if (r.density_zero_evaluated) {
    const auto& verdict = expect_line(lines, idx++, "dz_verdict", path);
    if (verdict.tokens.size() != 2 ||
        (verdict.tokens[1] != "consistent" &&
         verdict.tokens[1] != "inconsistent"))
      throw config_error(textio::loc(path, verdict.number) +
                         ": verdict must be consistent|inconsistent");
    r.density_zero.weak_mixing_consistent =
        verdict.tokens[1] == "consistent";
    r.density_zero.filtered_limit = keyed_double(
        expect_line(lines, idx++, "dz_filtered_limit", path), path);
    r.density_zero.complement_dev_mean = keyed_double(
        expect_line(lines, idx++, "dz_complement_dev", path), path);
    r.density_zero.excluded_density =
        keyed_double(expect_line(lines, idx++, "dz_density", path), path);
    const auto& excl = expect_line(lines, idx++, "dz_excluded", path);
    const std::string where = textio::loc(path, excl.number);
    if (excl.tokens.size() < 2)
      throw config_error(where + ": expected 'dz_excluded <count> ...'");
    const long long count = textio::parse_int(excl.tokens[1], where);
    if (count < 0 ||
        excl.tokens.size() != static_cast<std::size_t>(count) + 2)
      throw config_error(where + ": excluded-index count mismatch");
    for (long long j = 0; j < count; ++j)
      r.density_zero.excluded.push_back(static_cast<int>(textio::parse_int(
          excl.tokens[static_cast<std::size_t>(j) + 2], where)));
  }
  expect_line(lines, idx++, "end", path);
  if (idx != lines.size())
    throw config_error(textio::loc(path, lines[idx].number) +
                       ": trailing content after 'end'");
  return r;
}

}  // namespace corrlab

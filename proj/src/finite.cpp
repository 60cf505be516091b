#include "corrlab/finite.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <utility>

#include "corrlab/errors.hpp"
#include "textio.hpp"

namespace corrlab {

namespace {

constexpr double kSupportTol = 1e-14;
constexpr double kInvarianceTol = 1e-10;
// An eigenvalue counts as peripheral when its modulus is within this gap of
// the unit circle.  The bounded integer families handled here keep genuine
// subdominant moduli well below the gap, so the band is unpopulated.
constexpr double kPeripheralGap = 1e-6;
// Far-horizon power for the definitional deciders: A^(2^26) via squaring of
// the (stable, row-stochastic) Koopman matrix.  kPeripheralGap decay reaches
// e^-67 by then, far below kFarTol; genuinely peripheral parts stay O(1/m).
constexpr int kFarSquarings = 26;
constexpr double kFarTol = 1e-8;
constexpr double kFarEarlyExit = 1e-9;
constexpr int kFarWindow = 32;
// Signed Cesaro window for the average-mixing criterion: residue of a
// peripheral root of unity of order <= m decays like 2/(|1-lambda| L).
constexpr int kAvgWindow = 8192;
constexpr double kAvgTol = 1e-3;
constexpr int kErgodicHardCap = 22;  // 2^22 DP entries is the memory ceiling

double invariance_defect(const FiniteCorrespondence& fc,
                         const std::vector<double>& mu) {
  double worst = 0.0;
  for (int w = 0; w < fc.m; ++w) {
    double acc = 0.0;
    for (int z = 0; z < fc.m; ++z) acc += fc.M[w][z] * mu[z];
    worst = std::max(worst, std::abs(acc - fc.d * mu[w]));
  }
  return worst;
}

void require_measure_dim(const FiniteCorrespondence& fc,
                         const FiniteMeasure& mu) {
  if (static_cast<int>(mu.mu.size()) != fc.m)
    throw config_error("measure has " + std::to_string(mu.mu.size()) +
                       " entries but the correspondence has " +
                       std::to_string(fc.m) + " states");
}

void require_invariant(const FiniteCorrespondence& fc,
                       const FiniteMeasure& mu) {
  require_measure_dim(fc, mu);
  const double defect = invariance_defect(fc, mu.mu);
  if (defect > kInvarianceTol)
    throw config_error("measure is not invariant: pullback defect " +
                       textio::fmt_double(defect) + " exceeds " +
                       textio::fmt_double(kInvarianceTol));
}

std::vector<char> set_mask(const FiniteCorrespondence& fc,
                           const std::vector<int>& set,
                           const char* which) {
  std::vector<char> mask(fc.m, 0);
  for (const int i : set) {
    if (i < 0 || i >= fc.m)
      throw config_error(std::string(which) + " contains state " +
                         std::to_string(i) + ", valid range is [0, " +
                         std::to_string(fc.m) + ")");
    mask[i] = 1;
  }
  return mask;
}

// Koopman matrix and invariant measure restricted to support(mu); rows of A
// stay exactly stochastic there because invariance kills every column entry
// leading out of the support.
struct SuppModel {
  std::vector<int> idx;
  Eigen::MatrixXd A;
  Eigen::VectorXd mu;
};

SuppModel restrict_to_support(const FiniteCorrespondence& fc,
                              const FiniteMeasure& mu) {
  SuppModel model;
  model.idx = mu.support;
  if (model.idx.empty()) throw config_error("measure has empty support");
  const int n = static_cast<int>(model.idx.size());
  model.A.resize(n, n);
  model.mu.resize(n);
  double total = 0.0;
  for (int a = 0; a < n; ++a) total += mu.mu[model.idx[a]];
  for (int a = 0; a < n; ++a) {
    model.mu(a) = mu.mu[model.idx[a]] / total;
    for (int b = 0; b < n; ++b)
      model.A(a, b) =
          static_cast<double>(fc.M[model.idx[b]][model.idx[a]]) / fc.d;
  }
  return model;
}

double max_abs(const Eigen::MatrixXd& x) { return x.cwiseAbs().maxCoeff(); }

struct MixDecision {
  bool mixing = false;
  bool weak_mixing = false;
};

// Both properties are decided twice: spectrally and by explicit far-horizon
// powers (limit defect for mixing, a window mean of absolute defects for
// weak mixing).  (A - P)^n == A^n - P since AP = PA = P^2 = P, so the power
// side only ever multiplies row-stochastic matrices.
MixDecision decide_mixing(const FiniteCorrespondence& fc,
                          const FiniteMeasure& mu) {
  require_invariant(fc, mu);
  const SuppModel model = restrict_to_support(fc, mu);
  const int n = static_cast<int>(model.idx.size());
  const Eigen::MatrixXd P =
      Eigen::VectorXd::Ones(n) * model.mu.transpose();

  Eigen::ComplexEigenSolver<Eigen::MatrixXd> es_centered(model.A - P, false);
  if (es_centered.info() != Eigen::Success)
    throw numeric_error("eigensolver failed on the centered Koopman matrix");
  const double rho = es_centered.eigenvalues().cwiseAbs().maxCoeff();
  const bool spectral_mixing = rho < 1.0 - kPeripheralGap;

  Eigen::ComplexEigenSolver<Eigen::MatrixXd> es_plain(model.A, false);
  if (es_plain.info() != Eigen::Success)
    throw numeric_error("eigensolver failed on the Koopman matrix");
  int peripheral = 0;
  for (int k = 0; k < n; ++k)
    if (std::abs(es_plain.eigenvalues()(k)) > 1.0 - kPeripheralGap)
      ++peripheral;
  const bool spectral_weak = peripheral == 1;  // just the simple constant

  Eigen::MatrixXd far = model.A;
  double limit_defect = max_abs(far - P);
  for (int k = 0; k < kFarSquarings && limit_defect > kFarEarlyExit; ++k) {
    far = far * far;
    limit_defect = max_abs(far - P);
  }
  const bool definitional_mixing = limit_defect <= kFarTol;

  double window_mean = 0.0;
  Eigen::MatrixXd roll = far;
  for (int t = 0; t < kFarWindow; ++t) {
    roll = roll * model.A;
    window_mean += max_abs(roll - P);
  }
  window_mean /= kFarWindow;
  const bool definitional_weak = window_mean <= kFarTol;

  if (spectral_mixing != definitional_mixing)
    throw numeric_error(
        "mixing deciders disagree (spectral radius " +
        textio::fmt_double(rho) + ", far-horizon defect " +
        textio::fmt_double(limit_defect) + "); this is an internal bug");
  if (spectral_weak != definitional_weak)
    throw numeric_error(
        "weak-mixing deciders disagree (" + std::to_string(peripheral) +
        " peripheral eigenvalues, far-window defect " +
        textio::fmt_double(window_mean) + "); this is an internal bug");
  return MixDecision{spectral_mixing, spectral_weak};
}

// Normalized tensor product of two measures (renormalized so the result
// passes the exact-sum validation regardless of factor rounding).
FiniteMeasure tensor_measure(const FiniteMeasure& a, const FiniteMeasure& b) {
  const std::size_t mb = b.mu.size();
  std::vector<double> v(a.mu.size() * mb);
  double total = 0.0;
  for (std::size_t i = 0; i < a.mu.size(); ++i)
    for (std::size_t j = 0; j < mb; ++j) {
      v[i * mb + j] = a.mu[i] * b.mu[j];
      total += v[i * mb + j];
    }
  for (double& x : v) x /= total;
  return FiniteMeasure::from_vector(std::move(v));
}

}  // namespace

FiniteCorrespondence FiniteCorrespondence::create(
    std::vector<std::vector<int>> entries) {
  const int m = static_cast<int>(entries.size());
  if (m == 0)
    throw config_error("finite correspondence needs at least one state");
  for (int i = 0; i < m; ++i)
    if (static_cast<int>(entries[i].size()) != m)
      throw config_error("matrix must be square: row " + std::to_string(i) +
                         " has " + std::to_string(entries[i].size()) +
                         " entries, expected " + std::to_string(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (entries[i][j] < 0)
        throw config_error("multiplicities must be nonnegative: entry (" +
                           std::to_string(i) + ", " + std::to_string(j) +
                           ") is " + std::to_string(entries[i][j]));

  FiniteCorrespondence fc;
  fc.m = m;
  fc.row_sums.resize(m, 0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) fc.row_sums[i] += entries[i][j];
    if (fc.row_sums[i] == 0)
      throw config_error("row " + std::to_string(i) +
                         " is zero: the state has an empty forward image");
  }
  for (int j = 0; j < m; ++j) {
    int col = 0;
    for (int i = 0; i < m; ++i) col += entries[i][j];
    if (j == 0) {
      fc.d = col;
    } else if (col != fc.d) {
      throw config_error("column sums must agree: column " +
                         std::to_string(j) + " sums to " +
                         std::to_string(col) + " but column 0 sums to " +
                         std::to_string(fc.d));
    }
  }
  if (fc.d == 0)
    throw config_error("degree must be positive: all column sums are zero");
  fc.M = std::move(entries);
  return fc;
}

FiniteMeasure FiniteMeasure::from_vector(std::vector<double> v) {
  if (v.empty()) throw config_error("measure needs at least one entry");
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0))
      throw config_error("measure entries must be nonnegative: entry " +
                         std::to_string(i) + " is " +
                         textio::fmt_double(v[i]));
    total += v[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw config_error("measure must sum to 1, got " +
                       textio::fmt_double(total));
  FiniteMeasure mu;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > kSupportTol) mu.support.push_back(static_cast<int>(i));
  mu.mu = std::move(v);
  return mu;
}

std::vector<double> pullback(const FiniteCorrespondence& fc,
                             const std::vector<double>& v) {
  if (static_cast<int>(v.size()) != fc.m)
    throw config_error("pullback input has " + std::to_string(v.size()) +
                       " entries but the correspondence has " +
                       std::to_string(fc.m) + " states");
  std::vector<double> out(fc.m, 0.0);
  for (int w = 0; w < fc.m; ++w)
    for (int z = 0; z < fc.m; ++z) out[w] += fc.M[w][z] * v[z];
  return out;
}

std::vector<FiniteMeasure> invariant_measures(const FiniteCorrespondence& fc) {
  const int m = fc.m;
  // Backward-chain digraph: z -> w iff w occurs in F-dagger(z).
  std::vector<std::vector<int>> adj(m), radj(m);
  for (int z = 0; z < m; ++z)
    for (int w = 0; w < m; ++w)
      if (fc.M[w][z] > 0) {
        adj[z].push_back(w);
        radj[w].push_back(z);
      }

  // Kosaraju: finish order on adj, component sweep on radj.
  std::vector<int> order;
  order.reserve(m);
  std::vector<char> seen(m, 0);
  std::vector<std::pair<int, std::size_t>> stack;
  for (int s = 0; s < m; ++s) {
    if (seen[s]) continue;
    seen[s] = 1;
    stack.clear();
    stack.emplace_back(s, 0);
    while (!stack.empty()) {
      auto& [u, it] = stack.back();
      if (it < adj[u].size()) {
        const int v = adj[u][it++];
        if (!seen[v]) {
          seen[v] = 1;
          stack.emplace_back(v, 0);
        }
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }
  std::vector<int> comp(m, -1);
  int ncomp = 0;
  for (int k = m - 1; k >= 0; --k) {
    const int s = order[k];
    if (comp[s] >= 0) continue;
    std::vector<int> todo{s};
    comp[s] = ncomp;
    while (!todo.empty()) {
      const int u = todo.back();
      todo.pop_back();
      for (const int v : radj[u])
        if (comp[v] < 0) {
          comp[v] = ncomp;
          todo.push_back(v);
        }
    }
    ++ncomp;
  }

  std::vector<std::vector<int>> members(ncomp);
  for (int z = 0; z < m; ++z) members[comp[z]].push_back(z);
  std::vector<char> closed(ncomp, 1);
  for (int z = 0; z < m; ++z)
    for (const int w : adj[z])
      if (comp[w] != comp[z]) closed[comp[z]] = 0;

  // One Perron vector per closed class: the stationary distribution of the
  // row-stochastic Koopman block (kernel of its transpose minus identity).
  std::vector<std::vector<int>> classes;
  for (int c = 0; c < ncomp; ++c)
    if (closed[c]) classes.push_back(members[c]);
  std::sort(classes.begin(), classes.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  if (classes.empty())
    throw numeric_error("no closed class found; the backward chain is broken");

  std::vector<FiniteMeasure> out;
  for (const auto& cls : classes) {
    const int n = static_cast<int>(cls.size());
    Eigen::MatrixXd t(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        t(a, b) = static_cast<double>(fc.M[cls[a]][cls[b]]) / fc.d;
    // t = A_C^T directly: t(a, b) = A(b, a) = M[cls[a]][cls[b]] / d.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(t - Eigen::MatrixXd::Identity(n, n));
    lu.setThreshold(1e-9);
    const Eigen::MatrixXd kernel = lu.kernel();
    if (kernel.cols() < 1 || kernel.col(0).cwiseAbs().maxCoeff() < 1e-12)
      throw numeric_error("stationary solve failed on a closed class");
    Eigen::VectorXd x = kernel.col(0);
    if (x.sum() < 0) x = -x;
    if (x.minCoeff() < -1e-9 * x.cwiseAbs().maxCoeff())
      throw numeric_error("stationary vector is not nonnegative");
    x = x.cwiseMax(0.0);
    x /= x.sum();
    std::vector<double> full(m, 0.0);
    for (int a = 0; a < n; ++a) full[cls[a]] = x(a);
    out.push_back(FiniteMeasure::from_vector(std::move(full)));
  }
  return out;
}

std::vector<std::vector<double>> koopman_matrix(
    const FiniteCorrespondence& fc) {
  std::vector<std::vector<double>> k(fc.m, std::vector<double>(fc.m, 0.0));
  for (int z = 0; z < fc.m; ++z)
    for (int w = 0; w < fc.m; ++w)
      k[z][w] = static_cast<double>(fc.M[w][z]) / fc.d;
  return k;
}

double correlation_exact(const FiniteCorrespondence& fc,
                         const FiniteMeasure& mu,
                         const std::vector<double>& phi,
                         const std::vector<double>& psi, int n) {
  if (n < 0) throw config_error("correlation order must be nonnegative");
  if (static_cast<int>(phi.size()) != fc.m ||
      static_cast<int>(psi.size()) != fc.m)
    throw config_error("observables must have one value per state");
  require_invariant(fc, mu);
  std::vector<double> x = phi;
  std::vector<double> y(fc.m);
  for (int step = 0; step < n; ++step) {
    for (int z = 0; z < fc.m; ++z) {
      double acc = 0.0;
      for (int w = 0; w < fc.m; ++w) acc += fc.M[w][z] * x[w];
      y[z] = acc / fc.d;
    }
    x.swap(y);
  }
  double out = 0.0;
  for (int z = 0; z < fc.m; ++z) out += mu.mu[z] * x[z] * psi[z];
  return out;
}

bool is_almost_invariant(const FiniteCorrespondence& fc,
                         const FiniteMeasure& mu, const std::vector<int>& B) {
  require_measure_dim(fc, mu);
  const std::vector<char> in_b = set_mask(fc, B, "set B");
  // Stripping null atoms only shrinks the backward image, so the minimal
  // representative B' = B intersect supp(mu) decides almost invariance.
  for (const int w : mu.support) {
    if (!in_b[w]) continue;
    for (int z = 0; z < fc.m; ++z)
      if (fc.M[z][w] > 0 && !in_b[z]) return false;
  }
  return true;
}

bool is_ergodic(const FiniteCorrespondence& fc, const FiniteMeasure& mu,
                int cap) {
  require_measure_dim(fc, mu);
  const int effective_cap = std::min(cap, kErgodicHardCap);
  if (fc.m > effective_cap)
    throw cap_exceeded("ergodicity enumeration visits 2^m subsets: m = " +
                       std::to_string(fc.m) + " exceeds the cap " +
                       std::to_string(effective_cap));
  const int m = fc.m;
  std::uint32_t supp_mask = 0;
  for (const int z : mu.support) supp_mask |= 1u << z;
  // Column support masks: bit z of col_img[w] iff z lies in F-dagger(w).
  std::vector<std::uint32_t> col_img(m, 0);
  for (int w = 0; w < m; ++w)
    for (int z = 0; z < m; ++z)
      if (fc.M[z][w] > 0) col_img[w] |= 1u << z;
  for (int w = 0; w < m; ++w)
    if (!(supp_mask & (1u << w))) col_img[w] = 0;

  // img[mask] = F-dagger(mask intersect supp); B is a counterexample when it
  // is almost invariant with 0 < mu(B) < 1.
  std::vector<std::uint32_t> img(std::size_t{1} << m, 0);
  const std::uint32_t all = (m == 32) ? ~0u : ((1u << m) - 1);
  for (std::uint32_t mask = 1; mask <= all; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    img[mask] = img[mask ^ low] | col_img[std::countr_zero(low)];
    const std::uint32_t on_supp = mask & supp_mask;
    if (on_supp == 0 || on_supp == supp_mask) continue;
    if ((img[mask] & ~mask) == 0) return false;
  }
  return true;
}

bool is_mixing(const FiniteCorrespondence& fc, const FiniteMeasure& mu) {
  return decide_mixing(fc, mu).mixing;
}

bool is_weak_mixing(const FiniteCorrespondence& fc, const FiniteMeasure& mu) {
  return decide_mixing(fc, mu).weak_mixing;
}

FiniteCorrespondence kron_product(const FiniteCorrespondence& a,
                                  const FiniteCorrespondence& b,
                                  int cap_states) {
  const long long states = static_cast<long long>(a.m) * b.m;
  if (states > cap_states)
    throw cap_exceeded("product model has " + std::to_string(states) +
                       " states, cap is " + std::to_string(cap_states));
  const int m = static_cast<int>(states);
  std::vector<std::vector<int>> entries(m, std::vector<int>(m, 0));
  for (int i1 = 0; i1 < a.m; ++i1)
    for (int i2 = 0; i2 < b.m; ++i2)
      for (int j1 = 0; j1 < a.m; ++j1)
        for (int j2 = 0; j2 < b.m; ++j2)
          entries[i1 * b.m + i2][j1 * b.m + j2] =
              a.M[i1][j1] * b.M[i2][j2];
  return FiniteCorrespondence::create(std::move(entries));
}

FiniteCorrespondence finite_compose(const FiniteCorrespondence& outer,
                                    const FiniteCorrespondence& inner) {
  if (outer.m != inner.m)
    throw config_error("composition needs matching state counts, got " +
                       std::to_string(outer.m) + " and " +
                       std::to_string(inner.m));
  const int m = outer.m;
  std::vector<std::vector<int>> entries(m, std::vector<int>(m, 0));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      if (inner.M[i][k] == 0) continue;
      for (int j = 0; j < m; ++j)
        entries[i][j] += inner.M[i][k] * outer.M[k][j];
    }
  return FiniteCorrespondence::create(std::move(entries));
}

double check_product_invariance(const FiniteCorrespondence& a,
                                const FiniteCorrespondence& b,
                                const FiniteMeasure& mu_a,
                                const FiniteMeasure& mu_b, int n) {
  if (n < 0) throw config_error("iteration count must be nonnegative");
  require_invariant(a, mu_a);
  require_invariant(b, mu_b);
  const FiniteCorrespondence prod = kron_product(a, b);
  std::vector<double> nu(static_cast<std::size_t>(a.m) * b.m);
  for (int i = 0; i < a.m; ++i)
    for (int j = 0; j < b.m; ++j)
      nu[static_cast<std::size_t>(i) * b.m + j] = mu_a.mu[i] * mu_b.mu[j];
  std::vector<double> v = nu;
  double scale = 1.0;
  for (int step = 0; step < n; ++step) {
    v = pullback(prod, v);
    scale *= prod.d;
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k)
    worst = std::max(worst, std::abs(v[k] - scale * nu[k]));
  return worst;
}

MainTheoremCheck check_main_theorem(const FiniteCorrespondence& fc,
                                    const FiniteMeasure& mu) {
  MainTheoremCheck out;
  out.weak_mixing = is_weak_mixing(fc, mu);
  const FiniteCorrespondence prod = kron_product(fc, fc);
  const FiniteMeasure mu2 = tensor_measure(mu, mu);
  out.product_ergodic = is_ergodic(prod, mu2);
  out.product_weak_mixing = is_weak_mixing(prod, mu2);
  out.consistent = out.weak_mixing == out.product_ergodic &&
                   out.weak_mixing == out.product_weak_mixing;
  return out;
}

HierarchyCheck check_hierarchy(const FiniteCorrespondence& fc,
                               const FiniteMeasure& mu) {
  HierarchyCheck out;
  const MixDecision mix = decide_mixing(fc, mu);
  out.mixing = mix.mixing;
  out.weak_mixing = mix.weak_mixing;
  out.ergodic = is_ergodic(fc, mu);
  out.consistent = (!out.mixing || out.weak_mixing) &&
                   (!out.weak_mixing || out.ergodic);
  return out;
}

bool check_average_mixing_equivalence(const FiniteCorrespondence& fc,
                                      const FiniteMeasure& mu) {
  const bool ergodic = is_ergodic(fc, mu);
  require_invariant(fc, mu);
  const SuppModel model = restrict_to_support(fc, mu);
  const int n = static_cast<int>(model.idx.size());
  const Eigen::MatrixXd P = Eigen::VectorXd::Ones(n) * model.mu.transpose();
  // Signed far-window Cesaro mean of A^j: the decayed part is gone, roots of
  // unity average out like 1/window, and only an excess eigenvalue-1
  // projection (a second invariant set) survives - with entries at least the
  // off-class measure mass, far above kAvgTol for full-support instances.
  Eigen::MatrixXd power = model.A;
  for (int k = 0; k < 20; ++k) power = power * power;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < kAvgWindow; ++t) {
    power = power * model.A;
    acc += power;
  }
  const bool cesaro_to_product =
      max_abs(acc / kAvgWindow - P) <= kAvgTol;
  return ergodic == cesaro_to_product;
}

SetAverageResult check_set_average_inequality(const FiniteCorrespondence& fc,
                                              const FiniteMeasure& mu,
                                              const std::vector<int>& A,
                                              const std::vector<int>& B,
                                              int horizon) {
  if (horizon < 1) throw config_error("horizon must be at least 1");
  require_measure_dim(fc, mu);
  std::vector<char> cur = set_mask(fc, A, "set A");
  const std::vector<char> in_b = set_mask(fc, B, "set B");

  const auto mass = [&](const std::vector<char>& mask) {
    double acc = 0.0;
    for (int z = 0; z < fc.m; ++z)
      if (mask[z]) acc += mu.mu[z];
    return acc;
  };
  const auto cut_mass = [&](const std::vector<char>& mask) {
    double acc = 0.0;
    for (int z = 0; z < fc.m; ++z)
      if (mask[z] && in_b[z]) acc += mu.mu[z];
    return acc;
  };

  SetAverageResult out;
  out.product_bound = mass(cur) * mass(in_b);
  out.b_almost_invariant = is_almost_invariant(fc, mu, B);

  double running = 0.0;
  std::vector<char> next(fc.m);
  for (int j = 0; j <= horizon; ++j) {
    running += cut_mass(cur);
    out.cesaro_means.push_back(running / (j + 1));
    if (j == horizon) break;
    std::fill(next.begin(), next.end(), 0);
    // Forward image from the rows: j in F(i) iff M[i][j] > 0.
    for (int i = 0; i < fc.m; ++i) {
      if (!cur[i]) continue;
      for (int j2 = 0; j2 < fc.m; ++j2)
        if (fc.M[i][j2] > 0) next[j2] = 1;
    }
    cur.swap(next);
  }
  out.limit_estimate = out.cesaro_means.back();
  return out;
}

FiniteInstance random_finite_instance(int m, int d, RandomStream& rs) {
  if (m < 1 || d < 1)
    throw config_error("random instance needs m >= 1 and d >= 1");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    // Scatter d units down each column so the degree is exact by
    // construction; reject until rows are nonzero and an invariant measure
    // with full support (entries >= 0.01) exists.
    std::vector<std::vector<int>> entries(m, std::vector<int>(m, 0));
    for (int j = 0; j < m; ++j)
      for (int t = 0; t < d; ++t)
        ++entries[rs.uniform_below(static_cast<std::uint32_t>(m))][j];
    bool rows_ok = true;
    for (int i = 0; i < m && rows_ok; ++i) {
      int sum = 0;
      for (int j = 0; j < m; ++j) sum += entries[i][j];
      rows_ok = sum > 0;
    }
    if (!rows_ok) continue;
    FiniteCorrespondence fc = FiniteCorrespondence::create(std::move(entries));
    const std::vector<FiniteMeasure> extremes = invariant_measures(fc);
    std::vector<double> avg(m, 0.0);
    for (const FiniteMeasure& ext : extremes)
      for (int z = 0; z < m; ++z) avg[z] += ext.mu[z];
    double total = 0.0;
    for (const double x : avg) total += x;
    for (double& x : avg) x /= total;
    double least = avg[0];
    for (const double x : avg) least = std::min(least, x);
    if (least < 0.01) continue;
    return FiniteInstance{std::move(fc),
                          FiniteMeasure::from_vector(std::move(avg))};
  }
  throw numeric_error("random finite instance: 1000 attempts exhausted for " +
                      std::to_string(m) + " states, degree " +
                      std::to_string(d));
}

void save_finite(const std::string& path, const FiniteCorrespondence& fc,
                 const FiniteMeasure* mu) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open file for writing: " + path);
  out << "finite v1\n";
  out << "m " << fc.m << "\n";
  out << "d " << fc.d << "\n";
  for (int i = 0; i < fc.m; ++i) {
    out << "row";
    for (int j = 0; j < fc.m; ++j) out << " " << fc.M[i][j];
    out << "\n";
  }
  if (mu != nullptr) {
    out << "mu";
    for (const double x : mu->mu) out << " " << textio::fmt_double(x);
    out << "\n";
  }
  out << "end\n";
  if (!out) throw config_error("failed writing file: " + path);
}

LoadedFinite load_finite(const std::string& path) {
  using textio::loc;
  const std::vector<textio::Line> lines = textio::read_lines(path);
  std::size_t at = 0;
  const auto need = [&](const char* what) -> const textio::Line& {
    if (at >= lines.size())
      throw config_error(path + ": unexpected end of file, expected " + what);
    return lines[at];
  };

  {
    const auto& header = need("'finite v1'");
    if (header.tokens.size() != 2 || header.tokens[0] != "finite" ||
        header.tokens[1] != "v1")
      throw config_error(loc(path, header.number) +
                         ": expected header 'finite v1'");
    ++at;
  }
  const auto keyed_int = [&](const std::string& key) {
    const auto& line = need(("'" + key + " <value>'").c_str());
    if (line.tokens.size() != 2 || line.tokens[0] != key)
      throw config_error(loc(path, line.number) + ": expected '" + key +
                         " <value>'");
    const long long v =
        textio::parse_int(line.tokens[1], loc(path, line.number));
    ++at;
    return v;
  };
  const long long m = keyed_int("m");
  const long long d = keyed_int("d");
  if (m < 1 || m > 100000)
    throw config_error(path + ": state count " + std::to_string(m) +
                       " is out of range");

  std::vector<std::vector<int>> entries;
  for (long long i = 0; i < m; ++i) {
    const auto& line = need("a 'row' line");
    if (line.tokens.empty() || line.tokens[0] != "row")
      throw config_error(loc(path, line.number) + ": expected 'row', got '" +
                         line.tokens[0] + "'");
    if (static_cast<long long>(line.tokens.size()) != m + 1)
      throw config_error(loc(path, line.number) + ": row has " +
                         std::to_string(line.tokens.size() - 1) +
                         " entries, expected " + std::to_string(m));
    std::vector<int> row(m);
    for (long long j = 0; j < m; ++j)
      row[j] = static_cast<int>(
          textio::parse_int(line.tokens[j + 1], loc(path, line.number)));
    entries.push_back(std::move(row));
    ++at;
  }

  LoadedFinite out;
  try {
    out.fc = FiniteCorrespondence::create(std::move(entries));
  } catch (const config_error& e) {
    throw config_error(path + ": " + e.what());
  }
  if (out.fc.d != d)
    throw config_error(path + ": header says degree " + std::to_string(d) +
                       " but the columns sum to " + std::to_string(out.fc.d));

  {
    const auto& line = need("'mu' or 'end'");
    if (!line.tokens.empty() && line.tokens[0] == "mu") {
      if (static_cast<long long>(line.tokens.size()) != m + 1)
        throw config_error(loc(path, line.number) + ": mu has " +
                           std::to_string(line.tokens.size() - 1) +
                           " entries, expected " + std::to_string(m));
      std::vector<double> v(m);
      for (long long j = 0; j < m; ++j)
        v[j] = textio::parse_double(line.tokens[j + 1], loc(path, line.number));
      try {
        out.mu = FiniteMeasure::from_vector(std::move(v));
      } catch (const config_error& e) {
        throw config_error(loc(path, line.number) + ": " + e.what());
      }
      out.has_mu = true;
      ++at;
    }
  }
  {
    const auto& line = need("'end'");
    if (line.tokens.size() != 1 || line.tokens[0] != "end")
      throw config_error(loc(path, line.number) + ": expected 'end'");
    ++at;
  }
  if (at != lines.size())
    throw config_error(loc(path, lines[at].number) +
                       ": trailing content after 'end'");
  return out;
}

}  // namespace corrlab

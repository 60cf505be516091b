#include "corrlab/roots.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "corrlab/errors.hpp"

namespace corrlab {

Complex ComplexPolynomial::eval(Complex z) const {
  Complex acc{0.0, 0.0};
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
    acc = acc * z + *it;
  return acc;
}

Complex ComplexPolynomial::eval_derivative(Complex z) const {
  Complex acc{0.0, 0.0};
  const int n = nominal_degree();
  for (int k = n; k >= 1; --k)
    acc = acc * z + coefficients[static_cast<std::size_t>(k)] * double(k);
  return acc;
}

double ComplexPolynomial::max_coefficient_magnitude() const {
  double m = 0.0;
  for (const auto& c : coefficients) m = std::max(m, std::abs(c));
  return m;
}

bool ComplexPolynomial::identically_zero(double abs_floor) const {
  return max_coefficient_magnitude() <= abs_floor;
}

namespace {

// Residual acceptance bound for a finite root r of the (scaled, maxcoef = 1)
// polynomial of effective degree n.  Huge roots pass trivially: their bound
// exceeds anything representable long before |r| reaches 1e8.
bool residual_ok(const std::vector<Complex>& a, Complex r, double tol) {
  const double ar = std::abs(r);
  if (ar > 1e8) return true;
  Complex acc{0.0, 0.0};
  for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * r + *it;
  const int n = static_cast<int>(a.size()) - 1;
  const double bound = tol * double(n + 1) * std::pow(std::max(1.0, ar), n);
  return std::abs(acc) <= bound;
}

double residual_of(const std::vector<Complex>& a, Complex r) {
  Complex acc{0.0, 0.0};
  for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * r + *it;
  return std::abs(acc);
}

// Two roots of a2 z^2 + a1 z + a0 (a2 != 0), via the sign-stable variant.
std::pair<Complex, Complex> quadratic_roots(Complex a2, Complex a1,
                                            Complex a0) {
  if (a0 == Complex{}) return {Complex{}, -a1 / a2};
  Complex disc = std::sqrt(a1 * a1 - 4.0 * a2 * a0);
  if (std::real(std::conj(a1) * disc) < 0.0) disc = -disc;
  const Complex q = -0.5 * (a1 + disc);
  return {q / a2, a0 / q};  // q != 0 because a0 != 0
}

// Companion-matrix eigenvalues of the monic polynomial with ascending
// coefficients a (a.back() == 1 assumed by the caller).
std::vector<Complex> companion_eigenvalues(const std::vector<Complex>& a) {
  const int n = static_cast<int>(a.size()) - 1;
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) C(i, n - 1) = -a[static_cast<std::size_t>(i)];
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
  if (es.info() != Eigen::Success)
    throw numeric_error("poly_roots: companion eigenvalue solver failed");
  std::vector<Complex> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return out;
}

// One simultaneous-refinement sweep (Aberth-Ehrlich).  Returns the largest
// relative step taken.
double aberth_sweep(const std::vector<Complex>& a, std::vector<Complex>& z) {
  const int n = static_cast<int>(z.size());
  ComplexPolynomial p{std::vector<Complex>(a)};
  double max_step = 0.0;
  for (int i = 0; i < n; ++i) {
    const Complex zi = z[static_cast<std::size_t>(i)];
    const Complex pe = p.eval(zi);
    if (pe == Complex{}) continue;
    Complex pd = p.eval_derivative(zi);
    if (pd == Complex{}) {
      // Sitting on a critical point: nudge off it.
      z[static_cast<std::size_t>(i)] += Complex(1e-8, 1e-8) * (1.0 + std::abs(zi));
      max_step = 1.0;
      continue;
    }
    const Complex newton = pe / pd;
    Complex repulsion{0.0, 0.0};
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      Complex diff = zi - z[static_cast<std::size_t>(j)];
      if (diff == Complex{}) diff = Complex(1e-14, 0.0) * (1.0 + std::abs(zi));
      repulsion += 1.0 / diff;
    }
    const Complex denom = 1.0 - newton * repulsion;
    const Complex step = (std::abs(denom) < 1e-30) ? newton : newton / denom;
    z[static_cast<std::size_t>(i)] = zi - step;
    max_step = std::max(max_step, std::abs(step) / (1.0 + std::abs(zi)));
  }
  return max_step;
}

}  // namespace

std::vector<SpherePoint> poly_roots(const ComplexPolynomial& p,
                                    const RootSolverOptions& opt) {
  if (p.coefficients.empty())
    throw numeric_error("poly_roots: polynomial is identically zero");
  const double maxc = p.max_coefficient_magnitude();
  if (!(maxc > 0.0) || !std::isfinite(maxc))
    throw numeric_error(
        std::isfinite(maxc)
            ? "poly_roots: polynomial is identically zero"
            : "poly_roots: non-finite coefficient");

  // Scale so the largest coefficient has magnitude one; roots are unchanged
  // and the zero/residual tolerances become relative.
  std::vector<Complex> a = p.coefficients;
  for (auto& c : a) c /= maxc;

  // Degenerate leading coefficients are projective roots at infinity.
  int roots_at_infinity = 0;
  while (a.size() > 1 && std::abs(a.back()) <= opt.zero_tol) {
    a.pop_back();
    ++roots_at_infinity;
  }

  const int n = static_cast<int>(a.size()) - 1;
  std::vector<Complex> finite;
  if (n == 1) {
    finite.push_back(-a[0] / a[1]);
  } else if (n == 2) {
    auto [r1, r2] = quadratic_roots(a[2], a[1], a[0]);
    finite = {r1, r2};
  } else if (n >= 3) {
    std::vector<Complex> monic = a;
    const Complex lead = monic.back();
    for (auto& c : monic) c /= lead;
    finite = companion_eigenvalues(monic);
    // Refinement pass; multiple roots stall the step criterion, so the exit
    // test is the residual acceptance below, not step size alone.
    for (int it = 0; it < opt.max_iterations; ++it) {
      if (aberth_sweep(a, finite) < 1e-15) break;
    }
  }

  if (!finite.empty()) {
    double worst = 0.0;
    bool ok = true;
    for (const Complex& r : finite) {
      if (!residual_ok(a, r, opt.tol)) {
        ok = false;
        worst = std::max(worst, residual_of(a, r));
      }
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "poly_roots: refinement failed residual acceptance after "
          << opt.max_iterations << " iterations (best residual " << worst
          << " vs tol " << opt.tol << ", degree " << n << ")";
      throw numeric_error(msg.str());
    }
  }

  // Cluster merging (union-find over pairs within the chordal radius).
  std::vector<SpherePoint> pts;
  pts.reserve(finite.size() + static_cast<std::size_t>(roots_at_infinity));
  for (const Complex& r : finite) pts.emplace_back(r);
  for (int i = 0; i < roots_at_infinity; ++i) pts.push_back(SpherePoint::infinity());

  const std::size_t m = pts.size();
  if (m <= 1) return pts;
  if (m == 2) {  // fast path for the ubiquitous quadratic slice
    if (chordal_distance(pts[0], pts[1]) <= opt.cluster_radius) {
      if (pts[0].at_infinity || pts[1].at_infinity) {
        pts[0] = pts[1] = SpherePoint::infinity();
      } else {
        pts[0] = pts[1] = SpherePoint(0.5 * (pts[0].value + pts[1].value));
      }
    }
    return pts;
  }
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (chordal_distance(pts[i], pts[j]) <= opt.cluster_radius)
        parent[find(i)] = find(j);

  // Merged value: mean of finite members, or infinity if any member is
  // infinite (a huge finite root within the radius of infinity is treated
  // projectively).
  std::vector<Complex> sum(m);
  std::vector<int> count(m, 0);
  std::vector<bool> has_inf(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t r = find(i);
    if (pts[i].at_infinity) {
      has_inf[r] = true;
    } else {
      sum[r] += pts[i].value;
      ++count[r];
    }
  }
  std::vector<SpherePoint> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t r = find(i);
    if (has_inf[r])
      out.push_back(SpherePoint::infinity());
    else
      out.emplace_back(sum[r] / double(count[r]));
  }
  return out;
}

}  // namespace corrlab

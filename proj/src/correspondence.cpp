#include "corrlab/correspondence.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "corrlab/errors.hpp"
#include "corrlab/rng.hpp"
#include "textio.hpp"

namespace corrlab {

// ---------------------------------------------------------------------------
// BivariatePoly

Complex BivariatePoly::eval(Complex z, Complex w) const {
  // Horner over rows (z), each row Horner over columns (w).
  Complex acc{0.0, 0.0};
  for (int i = zn; i >= 0; --i) {
    Complex row{0.0, 0.0};
    for (int j = wn; j >= 0; --j) row = row * w + at(i, j);
    acc = acc * z + row;
  }
  return acc;
}

double BivariatePoly::max_coefficient_magnitude() const {
  double m = 0.0;
  for (const Complex& v : c) m = std::max(m, std::abs(v));
  return m;
}

int BivariatePoly::deg_z(double rel_tol) const {
  const double floor = rel_tol * max_coefficient_magnitude();
  for (int i = zn; i >= 0; --i)
    for (int j = 0; j <= wn; ++j)
      if (std::abs(at(i, j)) > floor) return i;
  return 0;
}

int BivariatePoly::deg_w(double rel_tol) const {
  const double floor = rel_tol * max_coefficient_magnitude();
  for (int j = wn; j >= 0; --j)
    for (int i = 0; i <= zn; ++i)
      if (std::abs(at(i, j)) > floor) return j;
  return 0;
}

void BivariatePoly::trim(double rel_tol) {
  const int dz = deg_z(rel_tol);
  const int dw = deg_w(rel_tol);
  if (dz == zn && dw == wn) return;
  BivariatePoly t(dz, dw);
  for (int i = 0; i <= dz; ++i)
    for (int j = 0; j <= dw; ++j) t.at(i, j) = at(i, j);
  *this = std::move(t);
}

namespace {

// Rescaling threshold for slices at large |value|: strictly above the unit
// circle so composition sample nodes on |z| = 1 stay unscaled (the rescale
// multiplies the slice by value^-deg, which is harmless for root finding but
// would corrupt polynomial interpolation).
constexpr double kSliceRescaleBound = 2.0;

}  // namespace

ComplexPolynomial BivariatePoly::slice_in_z(const SpherePoint& w) const {
  std::vector<Complex> out(static_cast<std::size_t>(zn + 1));
  if (w.at_infinity) {
    for (int i = 0; i <= zn; ++i) out[static_cast<std::size_t>(i)] = at(i, wn);
  } else if (std::abs(w.value) <= kSliceRescaleBound) {
    for (int i = 0; i <= zn; ++i) {
      Complex acc{0.0, 0.0};
      for (int j = wn; j >= 0; --j) acc = acc * w.value + at(i, j);
      out[static_cast<std::size_t>(i)] = acc;
    }
  } else {
    // Scaled by w^-wn: Horner in 1/w over reversed columns.
    const Complex iw = 1.0 / w.value;
    for (int i = 0; i <= zn; ++i) {
      Complex acc{0.0, 0.0};
      for (int j = 0; j <= wn; ++j) acc = acc * iw + at(i, j);
      out[static_cast<std::size_t>(i)] = acc;
    }
  }
  return ComplexPolynomial{std::move(out)};
}

ComplexPolynomial BivariatePoly::slice_in_w(const SpherePoint& z) const {
  std::vector<Complex> out(static_cast<std::size_t>(wn + 1));
  if (z.at_infinity) {
    for (int j = 0; j <= wn; ++j) out[static_cast<std::size_t>(j)] = at(zn, j);
  } else if (std::abs(z.value) <= kSliceRescaleBound) {
    for (int j = 0; j <= wn; ++j) {
      Complex acc{0.0, 0.0};
      for (int i = zn; i >= 0; --i) acc = acc * z.value + at(i, j);
      out[static_cast<std::size_t>(j)] = acc;
    }
  } else {
    const Complex iz = 1.0 / z.value;
    for (int j = 0; j <= wn; ++j) {
      Complex acc{0.0, 0.0};
      for (int i = 0; i <= zn; ++i) acc = acc * iz + at(i, j);
      out[static_cast<std::size_t>(j)] = acc;
    }
  }
  return ComplexPolynomial{std::move(out)};
}

// ---------------------------------------------------------------------------
// Internal helpers

namespace {

// Sylvester resultant of two univariate polynomials given by ascending
// coefficient lists of fixed nominal degree (list length - 1).  The matrix
// size is pinned by the nominal degrees, which is exactly the convention the
// composition bookkeeping relies on.
Complex sylvester_resultant(const std::vector<Complex>& a,
                            const std::vector<Complex>& b) {
  const int m = static_cast<int>(a.size()) - 1;
  const int n = static_cast<int>(b.size()) - 1;
  if (m < 0 || n < 0) throw numeric_error("resultant of empty polynomial");
  if (m == 0 && n == 0) return Complex{1.0, 0.0};
  const int size = m + n;
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(size, size);
  // n rows of a-coefficients (descending), then m rows of b-coefficients.
  for (int r = 0; r < n; ++r)
    for (int k = 0; k <= m; ++k)
      S(r, r + k) = a[static_cast<std::size_t>(m - k)];
  for (int r = 0; r < m; ++r)
    for (int k = 0; k <= n; ++k)
      S(n + r, r + k) = b[static_cast<std::size_t>(n - k)];
  return S.determinant();
}

// Proportionality test on trimmed grids: q ~ lambda * p for some complex
// lambda, within rel_tol of the larger scale.
bool proportional(const BivariatePoly& p, const BivariatePoly& q,
                  double rel_tol) {
  if (p.zn != q.zn || p.wn != q.wn) return false;
  // lambda from the largest entry of p.
  std::size_t imax = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < p.c.size(); ++k)
    if (std::abs(p.c[k]) > best) {
      best = std::abs(p.c[k]);
      imax = k;
    }
  if (best <= 0.0) return false;
  const Complex lambda = q.c[imax] / p.c[imax];
  const double scale =
      std::max(q.max_coefficient_magnitude(),
               std::abs(lambda) * p.max_coefficient_magnitude());
  if (scale <= 0.0) return false;
  for (std::size_t k = 0; k < p.c.size(); ++k)
    if (std::abs(q.c[k] - lambda * p.c[k]) > rel_tol * scale) return false;
  return true;
}

// Heuristic degeneracy probe: the z-discriminant of a component sampled
// along a fixed random line in w.  Identically vanishing discriminant
// indicates a non-reduced or everywhere-singular branch.
bool discriminant_degenerate(const BivariatePoly& p) {
  if (p.zn < 2) return false;
  RandomStream rs(0x5eedf00dULL, 0, /*tag=*/0xd15c);
  const Complex w0(rs.normal(), rs.normal());
  const Complex w1(rs.normal(), rs.normal());
  int vanishing = 0;
  for (int probe = 0; probe < 5; ++probe) {
    const Complex w = w0 + double(probe + 1) * 0.3 * w1;
    ComplexPolynomial q = p.slice_in_z(SpherePoint(w));
    const double scale = q.max_coefficient_magnitude();
    if (scale <= 0.0) {
      ++vanishing;
      continue;
    }
    std::vector<Complex> qa = q.coefficients;
    for (auto& v : qa) v /= scale;
    std::vector<Complex> qd(qa.size() - 1);
    for (std::size_t k = 1; k < qa.size(); ++k)
      qd[k - 1] = qa[k] * double(k);
    if (std::abs(sylvester_resultant(qa, qd)) < 1e-10) ++vanishing;
  }
  return vanishing == 5;
}

std::uint64_t checked_pow(std::uint64_t base, int exp, std::uint64_t cap) {
  // Returns min(base^exp, cap + 1) without overflow.
  std::uint64_t acc = 1;
  for (int i = 0; i < exp; ++i) {
    if (acc > cap / std::max<std::uint64_t>(base, 1)) return cap + 1;
    acc *= base;
    if (acc > cap) return cap + 1;
  }
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// PolyCorrespondence

PolyCorrespondence PolyCorrespondence::create(
    std::vector<CorrComponent> components, std::string label) {
  if (components.empty())
    throw config_error("correspondence needs at least one component");
  PolyCorrespondence corr;
  for (auto& comp : components) {
    if (comp.multiplicity < 1)
      throw config_error("component multiplicity must be >= 1");
    if (comp.poly.max_coefficient_magnitude() <= 0.0)
      throw config_error("component polynomial is identically zero");
    comp.poly.trim();
    if (comp.poly.zn < 1 || comp.poly.wn < 1)
      throw config_error(
          "component must have degree >= 1 in both variables (got deg_z=" +
          std::to_string(comp.poly.zn) + ", deg_w=" +
          std::to_string(comp.poly.wn) + ")");
  }
  for (std::size_t i = 0; i < components.size(); ++i)
    for (std::size_t j = i + 1; j < components.size(); ++j)
      if (proportional(components[i].poly, components[j].poly, 1e-8))
        throw config_error("components " + std::to_string(i) + " and " +
                           std::to_string(j) +
                           " are proportional; merge their multiplicities");
  corr.components_ = std::move(components);
  corr.label_ = std::move(label);
  for (const auto& comp : corr.components_) {
    corr.top_degree_ += comp.multiplicity * comp.poly.zn;
    corr.forward_degree_ += comp.multiplicity * comp.poly.wn;
  }
  if (corr.top_degree_ <= corr.forward_degree_)
    corr.warnings_.push_back(
        "topological degree d=" + std::to_string(corr.top_degree_) +
        " does not dominate forward degree d_f=" +
        std::to_string(corr.forward_degree_) +
        "; equidistribution toward a unique pullback-invariant measure is "
        "not guaranteed in this regime");
  for (std::size_t k = 0; k < corr.components_.size(); ++k)
    if (discriminant_degenerate(corr.components_[k].poly))
      corr.warnings_.push_back(
          "component " + std::to_string(k) +
          ": z-discriminant vanishes along a random w-line (non-reduced or "
          "everywhere-singular branch?)");
  return corr;
}

// ---------------------------------------------------------------------------
// Images and iteration

std::vector<SpherePoint> backward_image(const PolyCorrespondence& corr,
                                        const SpherePoint& w,
                                        const RootSolverOptions& opt) {
  std::vector<SpherePoint> out;
  out.reserve(static_cast<std::size_t>(corr.topological_degree()));
  for (const auto& comp : corr.components()) {
    const auto roots = poly_roots(comp.poly.slice_in_z(w), opt);
    for (int rep = 0; rep < comp.multiplicity; ++rep)
      out.insert(out.end(), roots.begin(), roots.end());
  }
  return out;
}

std::vector<SpherePoint> forward_image(const PolyCorrespondence& corr,
                                       const SpherePoint& z,
                                       const RootSolverOptions& opt) {
  std::vector<SpherePoint> out;
  out.reserve(static_cast<std::size_t>(corr.forward_degree()));
  for (const auto& comp : corr.components()) {
    const auto roots = poly_roots(comp.poly.slice_in_w(z), opt);
    for (int rep = 0; rep < comp.multiplicity; ++rep)
      out.insert(out.end(), roots.begin(), roots.end());
  }
  return out;
}

std::vector<SpherePoint> iterate_backward(const PolyCorrespondence& corr,
                                          const SpherePoint& w, int n,
                                          std::uint64_t cap,
                                          const RootSolverOptions& opt) {
  if (n < 0) throw config_error("iterate_backward: negative depth");
  const std::uint64_t d = static_cast<std::uint64_t>(corr.topological_degree());
  if (checked_pow(d, n, cap) > cap) {
    std::ostringstream msg;
    msg << "tree too large: d^n = " << d << "^" << n << " exceeds cap "
        << cap;
    throw cap_exceeded(msg.str());
  }
  std::vector<SpherePoint> frontier{w};
  for (int level = 0; level < n; ++level) {
    std::vector<SpherePoint> next;
    next.reserve(frontier.size() * static_cast<std::size_t>(d));
    for (const SpherePoint& p : frontier) {
      const auto pre = backward_image(corr, p, opt);
      next.insert(next.end(), pre.begin(), pre.end());
    }
    frontier = std::move(next);
  }
  return frontier;
}

// ---------------------------------------------------------------------------
// Composition

PolyCorrespondence compose(const PolyCorrespondence& outer,
                           const PolyCorrespondence& inner,
                           const ComposeOptions& opt) {
  std::vector<CorrComponent> out;
  RandomStream probe_rs(0xabadcafeULL, 0, /*tag=*/0xc03);

  for (const auto& ic : inner.components()) {
    for (const auto& oc : outer.components()) {
      const int a = ic.poly.zn;   // deg_z of inner
      const int b = ic.poly.wn;   // deg_y of inner
      const int cy = oc.poly.zn;  // deg_y of outer
      const int e = oc.poly.wn;   // deg_w of outer
      const int Dz = a * cy;
      const int Dw = e * b;
      if (Dz + Dw > opt.max_total_degree) {
        std::ostringstream msg;
        msg << "compose: nominal total degree " << Dz + Dw
            << " exceeds cap " << opt.max_total_degree;
        throw cap_exceeded(msg.str());
      }

      // Tensor sampling on slightly rotated unit-circle nodes (offsets keep
      // the grid clear of real-axis symmetries in typical inputs).
      const int P = Dz + 1, Q = Dw + 1;
      const double thz = 0.3711, thw = 0.9173;
      std::vector<Complex> znodes(static_cast<std::size_t>(P));
      std::vector<Complex> wnodes(static_cast<std::size_t>(Q));
      for (int p = 0; p < P; ++p)
        znodes[static_cast<std::size_t>(p)] =
            std::polar(1.0, 2.0 * M_PI * p / P + thz);
      for (int q = 0; q < Q; ++q)
        wnodes[static_cast<std::size_t>(q)] =
            std::polar(1.0, 2.0 * M_PI * q / Q + thw);

      std::vector<Complex> V(static_cast<std::size_t>(P * Q));
      double maxv = 0.0;
      for (int p = 0; p < P; ++p) {
        const auto ya =
            ic.poly.slice_in_w(SpherePoint(znodes[static_cast<std::size_t>(p)]));
        for (int q = 0; q < Q; ++q) {
          const auto yb = oc.poly.slice_in_z(
              SpherePoint(wnodes[static_cast<std::size_t>(q)]));
          const Complex det =
              sylvester_resultant(ya.coefficients, yb.coefficients);
          V[static_cast<std::size_t>(p * Q + q)] = det;
          maxv = std::max(maxv, std::abs(det));
        }
      }
      if (maxv <= 0.0)
        throw numeric_error(
            "compose: resultant vanishes on the whole sample grid (shared "
            "branch between inner and outer?)");

      // Inverse DFT in both directions, undoing the angular offsets.
      BivariatePoly grid(Dz, Dw);
      for (int i = 0; i <= Dz; ++i) {
        for (int j = 0; j <= Dw; ++j) {
          Complex acc{0.0, 0.0};
          for (int p = 0; p < P; ++p)
            for (int q = 0; q < Q; ++q)
              acc += V[static_cast<std::size_t>(p * Q + q)] *
                     std::polar(1.0, -(2.0 * M_PI * p / P + thz) * i -
                                         (2.0 * M_PI * q / Q + thw) * j);
          grid.at(i, j) = acc / double(P * Q);
        }
      }

      // Spot validation at random probe points before any normalization:
      // direct determinant vs interpolated grid.
      for (int probe = 0; probe < 3; ++probe) {
        const Complex pz = std::polar(probe_rs.uniform(0.5, 1.5),
                                      probe_rs.uniform(0.0, 2.0 * M_PI));
        const Complex pw = std::polar(probe_rs.uniform(0.5, 1.5),
                                      probe_rs.uniform(0.0, 2.0 * M_PI));
        const Complex direct = sylvester_resultant(
            ic.poly.slice_in_w(SpherePoint(pz)).coefficients,
            oc.poly.slice_in_z(SpherePoint(pw)).coefficients);
        const Complex interp = grid.eval(pz, pw);
        const double err = std::abs(direct - interp);
        // Probe radii reach 1.5, so allow the polynomial growth factor.
        const double scale =
            maxv * std::pow(1.5, double(Dz + Dw));
        if (err > opt.validation_tol * scale) {
          std::ostringstream msg;
          msg << "compose: interpolation validation failed (error " << err
              << " vs scale " << scale << ", condition estimate "
              << err / (2.2e-16 * scale) << ")";
          throw numeric_error(msg.str());
        }
      }

      grid.trim(opt.merge_tol);
      // Canonical scale: the largest entry becomes exactly 1.
      Complex pivot{0.0, 0.0};
      double best = -1.0;
      for (const Complex& v : grid.c)
        if (std::abs(v) > best) {
          best = std::abs(v);
          pivot = v;
        }
      for (Complex& v : grid.c) v /= pivot;

      const int mult = ic.multiplicity * oc.multiplicity;
      bool merged = false;
      for (auto& existing : out) {
        if (proportional(existing.poly, grid, opt.merge_tol)) {
          existing.multiplicity += mult;
          merged = true;
          break;
        }
      }
      if (!merged) out.push_back(CorrComponent{std::move(grid), mult});
    }
  }

  std::string label = outer.label().empty() || inner.label().empty()
                          ? std::string{}
                          : outer.label() + " o " + inner.label();
  return PolyCorrespondence::create(std::move(out), std::move(label));
}

// ---------------------------------------------------------------------------
// Products

ProductCorrespondence product(PolyCorrespondence left,
                              PolyCorrespondence right) {
  return ProductCorrespondence{std::move(left), std::move(right)};
}

std::vector<std::pair<SpherePoint, SpherePoint>> product_backward_image(
    const ProductCorrespondence& pc, const SpherePoint& w1,
    const SpherePoint& w2, const RootSolverOptions& opt) {
  const auto a = backward_image(pc.left, w1, opt);
  const auto b = backward_image(pc.right, w2, opt);
  std::vector<std::pair<SpherePoint, SpherePoint>> out;
  out.reserve(a.size() * b.size());
  for (const auto& pa : a)
    for (const auto& pb : b) out.emplace_back(pa, pb);
  return out;
}

// ---------------------------------------------------------------------------
// Definition files

void save_correspondence(const std::string& path,
                         const PolyCorrespondence& corr) {
  std::ofstream outf(path);
  if (!outf) throw config_error("cannot write file: " + path);
  outf << "correspondence v1\n";
  if (!corr.label().empty()) outf << "label " << corr.label() << "\n";
  for (const auto& comp : corr.components()) {
    outf << "component\n";
    outf << "multiplicity " << comp.multiplicity << "\n";
    for (int i = 0; i <= comp.poly.zn; ++i)
      for (int j = 0; j <= comp.poly.wn; ++j) {
        const Complex v = comp.poly.at(i, j);
        if (v == Complex{}) continue;
        outf << "coeff " << i << " " << j << " "
             << textio::fmt_double(v.real()) << " "
             << textio::fmt_double(v.imag()) << "\n";
      }
    outf << "end\n";
  }
  if (!outf) throw config_error("write failed: " + path);
}

PolyCorrespondence load_correspondence(const std::string& path) {
  const auto lines = textio::read_lines(path);
  if (lines.empty() || lines[0].tokens.size() != 2 ||
      lines[0].tokens[0] != "correspondence" || lines[0].tokens[1] != "v1")
    throw config_error(path + ": missing 'correspondence v1' header");

  std::string label;
  std::vector<CorrComponent> components;
  struct Entry {
    int i, j;
    Complex v;
  };
  std::vector<Entry> entries;
  int multiplicity = 1;
  bool in_component = false;

  auto flush = [&](int line_no) {
    if (entries.empty())
      throw config_error(textio::loc(path, line_no) +
                         ": component without coefficients");
    int mi = 0, mj = 0;
    for (const auto& e : entries) {
      mi = std::max(mi, e.i);
      mj = std::max(mj, e.j);
    }
    BivariatePoly poly(mi, mj);
    for (const auto& e : entries) poly.at(e.i, e.j) += e.v;
    components.push_back(CorrComponent{std::move(poly), multiplicity});
    entries.clear();
    multiplicity = 1;
  };

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto& ln = lines[li];
    const std::string& head = ln.tokens[0];
    const std::string where = textio::loc(path, ln.number);
    if (head == "label") {
      label.clear();
      for (std::size_t t = 1; t < ln.tokens.size(); ++t) {
        if (t > 1) label += ' ';
        label += ln.tokens[t];
      }
    } else if (head == "component") {
      if (in_component)
        throw config_error(where + ": nested 'component' (missing 'end'?)");
      in_component = true;
    } else if (head == "multiplicity") {
      if (!in_component || ln.tokens.size() != 2)
        throw config_error(where + ": stray or malformed 'multiplicity'");
      multiplicity =
          static_cast<int>(textio::parse_int(ln.tokens[1], where));
    } else if (head == "coeff") {
      if (!in_component || ln.tokens.size() != 5)
        throw config_error(where +
                           ": 'coeff' needs 4 fields (i j re im) inside a "
                           "component");
      Entry e;
      e.i = static_cast<int>(textio::parse_int(ln.tokens[1], where));
      e.j = static_cast<int>(textio::parse_int(ln.tokens[2], where));
      if (e.i < 0 || e.j < 0)
        throw config_error(where + ": negative exponent");
      e.v = Complex(textio::parse_double(ln.tokens[3], where),
                    textio::parse_double(ln.tokens[4], where));
      entries.push_back(e);
    } else if (head == "end") {
      if (!in_component)
        throw config_error(where + ": 'end' outside component");
      flush(ln.number);
      in_component = false;
    } else {
      throw config_error(where + ": unknown directive '" + head + "'");
    }
  }
  if (in_component)
    throw config_error(path + ": unterminated component (missing 'end')");
  return PolyCorrespondence::create(std::move(components), std::move(label));
}

}  // namespace corrlab

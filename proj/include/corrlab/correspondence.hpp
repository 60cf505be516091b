#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "corrlab/roots.hpp"
#include "corrlab/sphere.hpp"

namespace corrlab {

/// Dense bivariate polynomial P(z, w) = sum c(i, j) z^i w^j stored as a
/// rectangular coefficient grid, row index = z power, column index = w power.
struct BivariatePoly {
  int zn = 0;  // grid rows - 1 (nominal z degree)
  int wn = 0;  // grid cols - 1 (nominal w degree)
  std::vector<Complex> c;  // (zn+1) * (wn+1), row-major

  BivariatePoly() = default;
  BivariatePoly(int deg_z, int deg_w)
      : zn(deg_z), wn(deg_w),
        c(static_cast<std::size_t>((deg_z + 1) * (deg_w + 1)), Complex{}) {}

  Complex& at(int i, int j) {
    return c[static_cast<std::size_t>(i * (wn + 1) + j)];
  }
  const Complex& at(int i, int j) const {
    return c[static_cast<std::size_t>(i * (wn + 1) + j)];
  }

  Complex eval(Complex z, Complex w) const;
  double max_coefficient_magnitude() const;

  /// Effective degrees: highest row/column holding a coefficient above
  /// rel_tol * max magnitude.
  int deg_z(double rel_tol = 1e-12) const;
  int deg_w(double rel_tol = 1e-12) const;

  /// Drop trailing zero rows/columns (relative tolerance as above).
  void trim(double rel_tol = 1e-12);

  /// Univariate slice in z at a fixed w, length zn + 1 (nominal).  For w at
  /// infinity this is the leading-w coefficient column (the chart swap
  /// zeta = 1/w evaluated at zeta = 0); for large finite w the powers are
  /// rescaled by w^-wn, which leaves the root multiset untouched.
  ComplexPolynomial slice_in_z(const SpherePoint& w) const;

  /// Same with the roles of z and w exchanged: a polynomial in w at fixed z.
  ComplexPolynomial slice_in_w(const SpherePoint& z) const;
};

/// One irreducible branch of a correspondence with its integer multiplicity.
/// Irreducibility is asserted by the caller, not verified.
struct CorrComponent {
  BivariatePoly poly;
  int multiplicity = 1;
};

/// Validation + degree bookkeeping for a formal sum of bivariate components.
/// Invariants enforced at construction: at least one component, every
/// component effective deg_z >= 1 and deg_w >= 1, multiplicities >= 1,
/// components pairwise non-proportional.
class PolyCorrespondence {
 public:
  static PolyCorrespondence create(std::vector<CorrComponent> components,
                                   std::string label = "");

  /// Multiset size of a generic backward image: sum of m_j * deg_z.
  int topological_degree() const { return top_degree_; }
  /// Multiset size of a generic forward image: sum of m_j * deg_w.
  int forward_degree() const { return forward_degree_; }

  const std::vector<CorrComponent>& components() const { return components_; }
  const std::string& label() const { return label_; }
  void set_label(std::string l) { label_ = std::move(l); }

  /// Non-fatal diagnostics gathered at construction (degree-dominance
  /// heuristic, discriminant degeneracy probe).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  PolyCorrespondence() = default;
  std::vector<CorrComponent> components_;
  std::string label_;
  std::vector<std::string> warnings_;
  int top_degree_ = 0;
  int forward_degree_ = 0;
};

/// The full preimage multiset F^dagger(w): exactly topological_degree()
/// points counted with multiplicity, degenerate slices contributing points
/// at infinity.
std::vector<SpherePoint> backward_image(const PolyCorrespondence& corr,
                                        const SpherePoint& w,
                                        const RootSolverOptions& opt = {});

/// The forward image multiset F(z): forward_degree() points.
std::vector<SpherePoint> forward_image(const PolyCorrespondence& corr,
                                       const SpherePoint& z,
                                       const RootSolverOptions& opt = {});

/// (F^n)^dagger(w) as a flat multiset of d^n points, built by n successive
/// backward images.  Throws cap_exceeded when d^n > cap ("tree too large").
std::vector<SpherePoint> iterate_backward(const PolyCorrespondence& corr,
                                          const SpherePoint& w, int n,
                                          std::uint64_t cap = 1u << 20,
                                          const RootSolverOptions& opt = {});

struct ComposeOptions {
  /// Reject compositions whose nominal total degree (deg_z + deg_w of any
  /// output component) exceeds this bound.
  int max_total_degree = 64;
  /// Relative tolerance for merging proportional output components and for
  /// trimming the interpolated grid.
  double merge_tol = 1e-8;
  /// Spot-check tolerance: interpolated grid vs directly evaluated resultant
  /// at random probe points, relative to the grid scale.
  double validation_tol = 1e-6;
};

/// Composition (outer o inner)(z) = outer(inner(z)).  Each component pair is
/// composed by eliminating the middle variable y from inner(z, y) and
/// outer(y, w) with a Sylvester resultant, evaluated numerically on a tensor
/// sample grid and interpolated back to coefficients.  Multiplicities
/// multiply; proportional outputs merge.  The multiplicity bookkeeping at
/// non-generic points follows the fixed-size resultant convention.
PolyCorrespondence compose(const PolyCorrespondence& outer,
                           const PolyCorrespondence& inner,
                           const ComposeOptions& opt = {});

/// Cartesian product correspondence acting on pairs of sphere points.
struct ProductCorrespondence {
  PolyCorrespondence left;
  PolyCorrespondence right;

  int topological_degree() const {
    return left.topological_degree() * right.topological_degree();
  }
  int forward_degree() const {
    return left.forward_degree() * right.forward_degree();
  }
};

ProductCorrespondence product(PolyCorrespondence left,
                              PolyCorrespondence right);

/// Backward image of the product: the Cartesian product of the factor
/// multisets (left-major order), size d1 * d2.
std::vector<std::pair<SpherePoint, SpherePoint>> product_backward_image(
    const ProductCorrespondence& pc, const SpherePoint& w1,
    const SpherePoint& w2, const RootSolverOptions& opt = {});

/// Definition file round trip.  The format stores one "coeff i j re im" row
/// per nonzero grid entry with 17 significant digits, so save -> load is
/// bit-exact.  Loading validates through PolyCorrespondence::create.
void save_correspondence(const std::string& path,
                         const PolyCorrespondence& corr);
PolyCorrespondence load_correspondence(const std::string& path);

}  // namespace corrlab

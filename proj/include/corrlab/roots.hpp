#pragma once

#include <vector>

#include "corrlab/sphere.hpp"

namespace corrlab {

/// Dense univariate polynomial with complex coefficients in ascending order:
/// coefficients[k] multiplies z^k.  The coefficient list length is the
/// *nominal* degree plus one; leading entries may be (numerically) zero,
/// which the root solver interprets projectively as roots at infinity.
struct ComplexPolynomial {
  std::vector<Complex> coefficients;

  ComplexPolynomial() = default;
  explicit ComplexPolynomial(std::vector<Complex> c)
      : coefficients(std::move(c)) {}

  int nominal_degree() const {
    return static_cast<int>(coefficients.size()) - 1;
  }

  Complex eval(Complex z) const;             // Horner
  Complex eval_derivative(Complex z) const;  // Horner on p'

  double max_coefficient_magnitude() const;

  /// True when every coefficient is below rel_tol * max magnitude, i.e. the
  /// polynomial carries no information at all.
  bool identically_zero(double abs_floor = 0.0) const;
};

struct RootSolverOptions {
  /// Residual acceptance: a finite root r passes when
  ///   |p(r)| <= tol * maxcoef * (n + 1) * max(1, |r|)^n.
  double tol = 1e-9;

  /// Chordal radius inside which computed roots are merged into one root
  /// with summed multiplicity (merged value = cluster mean).
  double cluster_radius = 1e-7;

  /// Leading coefficients below zero_tol * maxcoef are treated as exact
  /// zeros, producing roots at infinity.
  double zero_tol = 1e-12;

  /// Simultaneous-refinement iteration cap; exceeding it with a failing
  /// residual raises numeric_error carrying the best residual seen.
  int max_iterations = 60;
};

/// All roots of p on the Riemann sphere, counted with multiplicity: the
/// result always holds exactly nominal_degree() points.  Degenerate leading
/// coefficients yield points at infinity.  Throws numeric_error when p is
/// identically zero or when refinement fails the residual acceptance test.
///
/// Reference path: companion-matrix eigenvalues (Eigen), then an
/// Aberth-style simultaneous refinement pass, then cluster merging.
/// Degrees one and two take closed-form fast paths.
std::vector<SpherePoint> poly_roots(const ComplexPolynomial& p,
                                    const RootSolverOptions& opt = {});

}  // namespace corrlab

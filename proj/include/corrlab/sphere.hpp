#pragma once

#include <complex>

namespace corrlab {

using Complex = std::complex<double>;

/// A point on the Riemann sphere: a finite complex value or the point at
/// infinity.  When at_infinity is set the stored value is ignored.
struct SpherePoint {
  Complex value{0.0, 0.0};
  bool at_infinity = false;

  SpherePoint() = default;
  SpherePoint(Complex v) : value(v) {}  // NOLINT: implicit by design
  SpherePoint(double re, double im) : value(re, im) {}

  static SpherePoint infinity() {
    SpherePoint p;
    p.at_infinity = true;
    return p;
  }

  bool finite() const { return !at_infinity; }
};

/// Chordal metric on the sphere, range [0, 2]:
///   d(p, q) = 2|p - q| / sqrt((1 + |p|^2)(1 + |q|^2))
///   d(p, inf) = 2 / sqrt(1 + |p|^2),   d(inf, inf) = 0.
double chordal_distance(const SpherePoint& p, const SpherePoint& q);

inline bool chordal_close(const SpherePoint& p, const SpherePoint& q,
                          double tol) {
  return chordal_distance(p, q) <= tol;
}

}  // namespace corrlab

#include "corrlab/sphere.hpp"

#include <algorithm>
#include <cmath>

namespace corrlab {

double chordal_distance(const SpherePoint& p, const SpherePoint& q) {
  // Values whose squared modulus overflows are indistinguishable from the
  // point at infinity at double precision.
  const bool pinf = p.at_infinity || !std::isfinite(std::norm(p.value));
  const bool qinf = q.at_infinity || !std::isfinite(std::norm(q.value));
  if (pinf && qinf) return 0.0;
  if (pinf || qinf) {
    const Complex& v = pinf ? q.value : p.value;
    return 2.0 / std::sqrt(1.0 + std::norm(v));
  }
  // Scale both points by the larger modulus so the product under the square
  // root cannot overflow:  d = 2|u-v|*inv / sqrt((inv^2+|u|^2)(inv^2+|v|^2))
  // with u = p/s, v = q/s, inv = 1/s.
  const double s = std::max({std::abs(p.value), std::abs(q.value), 1.0});
  const double inv = 1.0 / s;
  const Complex u = p.value * inv;
  const Complex v = q.value * inv;
  return 2.0 * std::abs(u - v) * inv /
         std::sqrt((inv * inv + std::norm(u)) * (inv * inv + std::norm(v)));
}

}  // namespace corrlab

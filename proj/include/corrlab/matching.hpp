#pragma once

#include <vector>

#include "corrlab/sphere.hpp"

namespace corrlab {

/// Bottleneck cost of the optimal perfect matching between two equal-size
/// point multisets under the chordal metric: the smallest t such that a is
/// matched one-to-one with b using only pairs at chordal distance <= t.
/// Throws config_error on size mismatch.  O(n^2 log n + n^3) — meant for
/// the small multisets produced by preimage and composition checks.
double bottleneck_match_distance(const std::vector<SpherePoint>& a,
                                 const std::vector<SpherePoint>& b);

}  // namespace corrlab

#pragma once

// Correspondences and clouds used across the test suite.

#include <cmath>
#include <numbers>

#include "corrlab/correspondence.hpp"
#include "corrlab/measures.hpp"
#include "corrlab/rng.hpp"

namespace corrlab::testing {

// w - z^2  (the squaring map as a correspondence; d = 2, d_f = 1)
inline PolyCorrespondence make_squaring() {
  BivariatePoly p(2, 1);
  p.at(0, 1) = 1.0;
  p.at(2, 0) = -1.0;
  return PolyCorrespondence::create({CorrComponent{p, 1}}, "squaring");
}

// (w - z^2) + (w - z^2/2): the two-generator semigroup; d = 4, d_f = 2
inline PolyCorrespondence make_semigroup() {
  BivariatePoly p1(2, 1);
  p1.at(0, 1) = 1.0;
  p1.at(2, 0) = -1.0;
  BivariatePoly p2(2, 1);
  p2.at(0, 1) = 1.0;
  p2.at(2, 0) = -0.5;
  return PolyCorrespondence::create(
      {CorrComponent{p1, 1}, CorrComponent{p2, 1}}, "semigroup");
}

// w - z  (identity)
inline PolyCorrespondence make_identity() {
  BivariatePoly p(1, 1);
  p.at(0, 1) = 1.0;
  p.at(1, 0) = -1.0;
  return PolyCorrespondence::create({CorrComponent{p, 1}}, "identity");
}

// w^2 - z  (square root; d = 1 <= d_f = 2, triggers the dominance warning)
inline PolyCorrespondence make_sqrt() {
  BivariatePoly p(1, 2);
  p.at(0, 2) = 1.0;
  p.at(1, 0) = -1.0;
  return PolyCorrespondence::create({CorrComponent{p, 1}}, "sqrt");
}

// Uniform sample of arc-length measure on the unit circle.
inline WeightedPointCloud make_circle_cloud(std::size_t n,
                                            std::uint64_t seed) {
  RandomStream rs(seed, 0, 0xc1c1e);
  std::vector<SpherePoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    pts.emplace_back(
        std::polar(1.0, rs.uniform(0.0, 2.0 * std::numbers::pi)));
  return WeightedPointCloud::equal_weights(std::move(pts), "circle fixture");
}

}  // namespace corrlab::testing

#pragma once

// Backward random walks shared by the sampling estimators: one uniform
// draw below d picks both the component (weighted by multiplicity times
// z-degree) and the root copy inside it, so a walk consumes exactly one
// draw per step and is reproducible from its stream alone.

#include <string>
#include <vector>

#include "corrlab/correspondence.hpp"
#include "corrlab/errors.hpp"
#include "corrlab/rng.hpp"
#include "corrlab/roots.hpp"

namespace corrlab::walkers {

inline std::vector<int> component_cumulative(const PolyCorrespondence& corr) {
  std::vector<int> cum;
  int acc = 0;
  for (const auto& comp : corr.components()) {
    acc += comp.multiplicity * comp.poly.zn;
    cum.push_back(acc);
  }
  return cum;
}

inline SpherePoint walk_step(const PolyCorrespondence& corr,
                             const SpherePoint& cur,
                             const std::vector<int>& cum, RandomStream& rs) {
  const int d = corr.topological_degree();
  const int r =
      static_cast<int>(rs.uniform_below(static_cast<std::uint64_t>(d)));
  std::size_t j = 0;
  while (r >= cum[j]) ++j;
  const int before = (j == 0) ? 0 : cum[j - 1];
  const auto roots = poly_roots(corr.components()[j].poly.slice_in_z(cur));
  return roots[static_cast<std::size_t>(r - before) % roots.size()];
}

inline SpherePoint run_walk(const PolyCorrespondence& corr,
                            const SpherePoint& start, int n,
                            const std::vector<int>& cum, RandomStream& rs,
                            int retry_cap) {
  for (int attempt = 0;; ++attempt) {
    try {
      SpherePoint cur = start;
      for (int step = 0; step < n; ++step) cur = walk_step(corr, cur, cum, rs);
      return cur;
    } catch (const numeric_error& e) {
      if (attempt >= retry_cap)
        throw numeric_error("backward walk gave up after " +
                            std::to_string(retry_cap) +
                            " retries: " + e.what());
    }
  }
}

}  // namespace corrlab::walkers

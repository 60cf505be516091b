#include "corrlab/matching.hpp"

#include <algorithm>
#include <functional>
#include <vector>

#include "corrlab/errors.hpp"

namespace corrlab {
namespace {

// Kuhn's augmenting-path matching restricted to edges with cost <= t.
bool perfect_matching_under(const std::vector<std::vector<double>>& cost,
                            double t) {
  const int n = static_cast<int>(cost.size());
  std::vector<int> match_b(static_cast<std::size_t>(n), -1);
  std::vector<char> visited;
  std::function<bool(int)> try_augment = [&](int a) -> bool {
    for (int b = 0; b < n; ++b) {
      if (cost[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] > t ||
          visited[static_cast<std::size_t>(b)])
        continue;
      visited[static_cast<std::size_t>(b)] = 1;
      if (match_b[static_cast<std::size_t>(b)] < 0 ||
          try_augment(match_b[static_cast<std::size_t>(b)])) {
        match_b[static_cast<std::size_t>(b)] = a;
        return true;
      }
    }
    return false;
  };
  for (int a = 0; a < n; ++a) {
    visited.assign(static_cast<std::size_t>(n), 0);
    if (!try_augment(a)) return false;
  }
  return true;
}

}  // namespace

double bottleneck_match_distance(const std::vector<SpherePoint>& a,
                                 const std::vector<SpherePoint>& b) {
  if (a.size() != b.size())
    throw config_error("bottleneck_match_distance: size mismatch");
  const int n = static_cast<int>(a.size());
  if (n == 0) return 0.0;

  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = chordal_distance(a[static_cast<std::size_t>(i)],
                                        b[static_cast<std::size_t>(j)]);
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
      values.push_back(d);
    }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  // Binary search for the smallest threshold admitting a perfect matching.
  std::size_t lo = 0, hi = values.size() - 1;
  if (perfect_matching_under(cost, values[lo])) return values[lo];
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (perfect_matching_under(cost, values[mid]))
      hi = mid;
    else
      lo = mid;
  }
  return values[hi];
}

}  // namespace corrlab

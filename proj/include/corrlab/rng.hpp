#pragma once

#include <array>
#include <cstdint>

namespace corrlab {

/// Deterministic counter-keyed random stream (xoshiro256** state filled by
/// splitmix64 from the pair (seed, stream_id)).  The same (seed, stream_id)
/// always yields the same sequence, independent of platform, worker count or
/// call interleaving, which is what makes chunked parallel sampling
/// reproducible: every chunk owns stream_id = chunk index and the merge order
/// is fixed.
///
/// The optional tag decorrelates distinct call sites that share one
/// experiment seed; tag 0 reproduces the plain (seed, stream_id) contract.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id,
               std::uint64_t tag = 0);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1), 53 random bits.
  double uniform01();

  /// Uniform in [a, b).
  double uniform(double a, double b);

  /// Uniform integer in [0, n).  n must be positive.
  std::uint32_t uniform_below(std::uint32_t n);

  /// Standard normal via Box-Muller (one value per call; no caching so the
  /// draw count stays predictable).
  double normal();

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace corrlab

#include "corrlab/rng.hpp"

#include <cmath>

namespace corrlab {
namespace {

// splitmix64: the standard state expander, used only for seeding.
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id,
                           std::uint64_t tag) {
  // Mix seed, stream and tag so that distinct ids give unrelated states.
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64(x);
  x ^= stream_id * 0xd1342543de82ef95ULL;
  std::uint64_t b = splitmix64(x);
  x ^= tag * 0xaf251af3b0f025b5ULL;
  std::uint64_t c = splitmix64(x);
  std::uint64_t d = splitmix64(x);
  s_ = {a, b, c, d};
  // xoshiro must not start at the all-zero state.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[3] = 1;
}

std::uint64_t RandomStream::next_u64() {
  // xoshiro256**
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RandomStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double a, double b) {
  return a + (b - a) * uniform01();
}

std::uint32_t RandomStream::uniform_below(std::uint32_t n) {
  // Rejection sampling on the top 32 bits keeps the draw unbiased.
  const std::uint32_t limit = 0xffffffffu - 0xffffffffu % n;
  for (;;) {
    std::uint32_t v = static_cast<std::uint32_t>(next_u64() >> 32);
    if (v < limit || limit == 0) return v % n;
  }
}

double RandomStream::normal() {
  // Box-Muller, discarding the second value.
  double u1 = uniform01();
  double u2 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace corrlab

#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace driftlab {

// Self-contained deterministic RNG (xoshiro256++ seeded via splitmix64).
// The standard library distributions are implementation-defined, so all
// sampling helpers are hand-rolled here: a trace produced from a given
// (master seed, scope, purpose) key is reproducible bit-for-bit.

inline std::uint64_t splitmix64_next(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) w = splitmix64_next(x);
  }

  // Derives an independent stream from (master seed, scope, purpose).
  // Streams are keyed, not sequential: adding users or purposes to an
  // experiment never perturbs the draws of existing ones.
  static RngStream keyed(std::uint64_t master, std::string_view scope,
                         std::string_view purpose) {
    std::uint64_t x = master;
    std::uint64_t s = splitmix64_next(x) ^ fnv1a64(scope);
    s = splitmix64_next(s) ^ fnv1a64(purpose);
    return RngStream(splitmix64_next(s));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[uniform_below(v.size())];
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace driftlab

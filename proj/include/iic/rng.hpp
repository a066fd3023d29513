#pragma once

#include <cmath>
#include <cstdint>

namespace iic::rng {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-seeded random stream. A (seed, key...) tuple selects an
/// independent substream, so parallel callers that key their streams by
/// work item produce results independent of scheduling.
class Substream {
 public:
  explicit Substream(std::uint64_t seed, std::uint64_t k1 = 0,
                     std::uint64_t k2 = 0, std::uint64_t k3 = 0) {
    // Mix all keys into the state; each absorb round is a full avalanche.
    state_ = seed;
    (void)splitmix64_next(state_);
    state_ ^= k1;
    (void)splitmix64_next(state_);
    state_ ^= k2;
    (void)splitmix64_next(state_);
    state_ ^= k3;
    (void)splitmix64_next(state_);
  }

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a log argument.
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace iic::rng

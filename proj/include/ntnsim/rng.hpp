#pragma once
/**
 * rng.hpp — deterministic, bit-portable random streams.
 *
 * Core generator is SplitMix64 (public domain, Steele/Lea/Flood): the state
 * advances by a fixed odd constant and every output is a finalizing hash of
 * the state.  Two properties matter here:
 *
 *   1. Bit reproducibility.  Only uint64 arithmetic and IEEE-754 double
 *      division are used, so the same seed yields the same draws on every
 *      platform and toolchain.  (std::normal_distribution et al. are
 *      implementation-defined and would break this.)
 *   2. Cheap independent substreams.  fork(tag) hashes the parent seed with
 *      the tag into a child seed without consuming parent state, so per-UE /
 *      per-link / per-hour streams can be built in any order (or in
 *      parallel) and still produce identical values.
 */

#include <cmath>
#include <cstdint>

namespace ntnsim {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// SplitMix64 finalizer: avalanching bijection on 64-bit words.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;  // golden-ratio increment
    return mix(state_);
  }

  /// Child stream keyed by one or two tags; parent state is not consumed.
  Rng fork(std::uint64_t tag) const {
    return Rng(mix(state_ ^ mix(tag + 0xD1B54A32D192ED03ull)));
  }
  Rng fork(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return fork(tag_a).fork(tag_b);
  }

  /// Uniform double in [0, 1) with full 53-bit mantissa resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via Box–Muller (always consumes exactly two uniforms).
  double normal01() {
    double u1 = uniform01();
    double u2 = uniform01();
    // Guard u1 = 0 so log() stays finite; 2^-53 keeps the tail intact.
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal01(); }

  /**
   * Normal draw clamped to mean ± nsigma*sigma.  Used for shadowing and
   * penetration draws: the clamp bounds the worst-case link budget so
   * coverage guarantees can be engineered deterministically.  nsigma <= 0
   * disables the clamp.
   */
  double normal_clamped(double mean, double sigma, double nsigma) {
    double z = normal01();
    if (nsigma > 0.0) {
      if (z > nsigma) z = nsigma;
      if (z < -nsigma) z = -nsigma;
    }
    return mean + sigma * z;
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace ntnsim

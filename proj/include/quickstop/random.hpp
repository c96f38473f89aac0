#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace quickstop {

/// Seeded random stream with a fully specified output sequence.
///
/// std::mt19937_64 is bit-exact across standard libraries; the
/// distribution objects are not, so every variate here is derived from the
/// raw 64-bit draws.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for a sub-task, keyed by (seed, salt).
  static RandomStream derive(std::uint64_t seed, std::uint64_t salt) {
    return RandomStream(mix(seed ^ mix(salt + 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n), by rejection to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Exponential with unit rate.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace quickstop

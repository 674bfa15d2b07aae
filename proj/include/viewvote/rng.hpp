// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace viewvote {

/// Deterministic random generator with portable output.
///
/// The standard <random> distributions are implementation-defined, which
/// breaks the bit-reproducibility contract of the pipeline, so sampling is
/// implemented directly on top of a splitmix64 stream. Seeding with the same
/// value yields the same sequence on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform index in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n) {
    // Multiply-shift map of the full 64-bit output onto [0, n).
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard-normal sample via Box-Muller (no spare caching, so the draw
  /// count per call is fixed and streams stay alignment-independent).
  double normal(double mean, double sigma) {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Derives an independent stream seed from a base seed and an index.
  static uint64_t derive(uint64_t seed, uint64_t index) {
    Rng r(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
    return r.next_u64();
  }

 private:
  uint64_t state_;
};

}  // namespace viewvote

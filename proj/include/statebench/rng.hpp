#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace statebench {

// Portable seeded generator: xoshiro256** with state expanded from the seed by
// splitmix64. Every derived draw (uniform, normal, bounded integer, shuffle) is
// defined here rather than through <random> distributions, whose outputs are
// implementation-defined, so seeded splits reproduce across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, bound), rejection sampled. bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via the Box-Muller transform (cached second variate).
  double normal();

  /// Fisher-Yates, iterating from the back.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace statebench

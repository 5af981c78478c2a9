#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sage {

// Randomness helpers built only on the mt19937_64 bit stream. The standard
// distribution objects and std::shuffle are implementation-defined, which
// would make "same seed, same output" break across standard libraries, so
// everything below does its own mapping from raw 64-bit draws.

/// Unbiased integer in [0, bound). bound must be > 0.
inline std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

/// Uniform double in [0, 1) with 53 bits of entropy.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

/// Fisher-Yates shuffle with the bounded_rand mapping above.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded_rand(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// [0, 1, ..., n-1] shuffled.
inline std::vector<std::size_t> shuffled_indices(std::size_t n,
                                                 std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  deterministic_shuffle(idx, rng);
  return idx;
}

}  // namespace sage

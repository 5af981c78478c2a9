#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sage {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

/// 64-bit FNV-1a. Used for feature hashing, fingerprints and file checksums,
/// so it must never change behavior between releases.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t state = kFnvOffsetBasis) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t state = kFnvOffsetBasis) {
  return fnv1a64(
      std::string_view(static_cast<const char*>(data), size), state);
}

/// Fixed-width lowercase hex, suitable for fingerprints.
inline std::string to_hex(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

}  // namespace sage

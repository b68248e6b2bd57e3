#pragma once

#include <cstdint>

namespace conseg {

// SplitMix64 finalizer: bijective 64-bit mix with strong avalanche.
inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream key for a (seed, a, b) triple, e.g. (user seed, axis, slice).
// Chained mixing keeps distinct triples on distinct streams.
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(seed ^ 0x8e9c01f4a3b75c39ULL) ^ a) ^ b);
}

// SplitMix64: counter-based, so a stream is fully determined by its key
// and position. Platform-independent by construction (pure 64-bit ops).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t key) : state_(key) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Exactly uniform draw from [0, n) via rejection of the biased low range.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t cutoff = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = next();
    while (x < cutoff) x = next();
    return x % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace conseg

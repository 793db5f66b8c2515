#pragma once

#include <cstdint>
#include <initializer_list>

#include "gpcmc/normal.hpp"

namespace gpcmc {

// Counter-based random streams. A stream is identified by a 64-bit key; the
// k-th variate of a stream is a pure function of (key, k), so draws can be
// evaluated in any order and from any thread without changing results.
// The generator is the splitmix64 output function applied to key + k*gamma
// (Steele, Lea & Flood 2014).

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable substream identifiers; keeps every consumer of randomness on a
/// distinct named stream derived from the single user-facing seed.
enum class StreamTag : std::uint64_t {
  OrthantPass = 1,
  Resample = 2,
  TestPattern = 3,
  Shuffle = 4,
  BruteForce = 5,
  ProblemGen = 6,
  DatasetGen = 7,
  SeedDerive = 8,
};

class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ + (counter + 1) * kGolden);
  }

  /// Uniform on the open interval (0,1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the inverse CDF (exactly one counter per draw).
  double normal(std::uint64_t counter) const {
    return inverse_normal_cdf(uniform(counter));
  }

  /// Uniform integer in [0, n). n must be >= 1.
  std::uint64_t index(std::uint64_t counter, std::uint64_t n) const {
    const auto k = static_cast<std::uint64_t>(uniform(counter) * static_cast<double>(n));
    return k >= n ? n - 1 : k;
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

/// Folds a seed plus a list of identifiers into a stream key.
inline std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t k = mix64(seed + kGolden);
  for (std::uint64_t id : ids) k = mix64(k ^ mix64(id + kGolden));
  return k;
}

inline std::uint64_t derive_key(std::uint64_t seed, StreamTag tag,
                                std::initializer_list<std::uint64_t> ids = {}) {
  std::uint64_t k = derive_key(seed, {static_cast<std::uint64_t>(tag)});
  for (std::uint64_t id : ids) k = mix64(k ^ mix64(id + kGolden));
  return k;
}

}  // namespace gpcmc

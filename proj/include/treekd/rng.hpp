#pragma once

#include <array>
#include <cstdint>

namespace treekd {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer. Used both for seeding and as the library's generic
// 64-bit mixing step (fingerprints, scaffold hashes, tree fingerprints).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Order-sensitive fold of a value into a running hash.
constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ (v + kGoldenGamma + (seed << 6) + (seed >> 2)));
}

// Derives the seed of an independent substream. Stream k is the master seed
// XOR the golden-ratio-scrambled index, so stream k never depends on how many
// other streams exist.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ mix64((index + 1) * kGoldenGamma);
}

// xoshiro256** generator. Pinned here (rather than std::mt19937 or a
// platform default) so fitted models are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // SplitMix64 state expansion, the seeding recommended for xoshiro.
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s += kGoldenGamma;
      w = mix64(s);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform draw in [0, n). Plain modulo: the bias at our n (< 2^20) is far
  // below anything observable, and the draw sequence stays trivially
  // re-implementable from the documented generator.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace treekd

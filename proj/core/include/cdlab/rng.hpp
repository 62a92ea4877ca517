#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace cdlab {

// splitmix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Labels for the independent streams drawn from one root seed.
enum class StreamTag : std::uint64_t {
  kData = 1,
  kChain = 2,
  kBatch = 3,
  kAlpha = 4,
  kReplication = 5,
  kTest = 99,
};

// Deterministic seed of the substream (root, tag, a, b).
//
// Every random quantity in a run is a pure function of its substream, so
// the assignment of work to threads cannot change any result. Chains in
// the CD drivers use (root, kChain, update_index, data_index).
constexpr std::uint64_t substream_seed(std::uint64_t root, StreamTag tag, std::uint64_t a = 0,
                                       std::uint64_t b = 0) noexcept {
  std::uint64_t h = mix64(root);
  h = mix64(h ^ static_cast<std::uint64_t>(tag));
  h = mix64(h ^ a);
  h = mix64(h ^ (b * 0xd1b54a32d192ed03ULL));
  return h;
}

// xoshiro256** generator. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t z = seed;
    for (auto& w : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      w = mix64(z);
    }
  }

  Rng(std::uint64_t root, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0) noexcept
      : Rng(substream_seed(root, tag, a, b)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(*this);
  }

  double normal() { return normal_(*this); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
  std::normal_distribution<double> normal_{};
};

}  // namespace cdlab

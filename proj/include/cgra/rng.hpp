#pragma once

// Reproducible randomness.
//
// All data generation draws from std::mt19937_64, whose output sequence is
// fixed by the C++ standard. Bounded integers use the multiply-high
// reduction below instead of std::uniform_int_distribution, whose algorithm
// is implementation-defined. Independent streams are split from one root
// seed with SplitMix64:
//
//   derive_seed(root, stream) = splitmix64(root + (stream + 1) * 0x9E3779B97F4A7C15)

#include <cstdint>
#include <random>

namespace cgra {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return splitmix64(root + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound). bound must be nonzero and < 2^32.
  std::uint32_t below(std::uint32_t bound) {
    const std::uint64_t hi = engine_() >> 32;
    return static_cast<std::uint32_t>((hi * bound) >> 32);
  }

 private:
  std::mt19937_64 engine_;
};

// 32-bit counter hash evaluated inside generated kernels to produce
// pseudo-random address streams. Built only from ADD, MUL, LSHR and XOR so
// a single PE can compute it.
constexpr std::uint32_t kHashMulA = 0x9E3779B1u;
constexpr std::uint32_t kHashMulB = 0x85EBCA6Bu;

constexpr std::uint32_t stream_hash(std::uint32_t k, std::uint32_t key) {
  std::uint32_t h = (k + key) * kHashMulA;
  h ^= h >> 16;
  h *= kHashMulB;
  h ^= h >> 13;
  return h;
}

}  // namespace cgra

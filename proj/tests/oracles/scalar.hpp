#pragma once

// Scalar reference evaluation of the generated benchmark kernels. These read
// the generated input arrays from the kernel's regions and recompute the
// expected final memory image without touching the simulator.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgra/kernel.hpp"
#include "cgra/kernel_gen.hpp"

namespace oracle {

using Image = std::vector<std::vector<std::uint32_t>>;

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Key of the counter hash used by randomised patterns (stream 5 of the seed).
inline std::uint32_t hash_key(std::uint64_t seed) {
  return static_cast<std::uint32_t>(splitmix(seed + 6 * 0x9E3779B97F4A7C15ULL));
}

inline std::uint32_t counter_hash(std::uint32_t k, std::uint32_t key) {
  std::uint32_t h = (k + key) * 0x9E3779B1u;
  h ^= h >> 16;
  h *= 0x85EBCA6Bu;
  h ^= h >> 13;
  return h;
}

inline std::size_t region_index(const cgra::KernelProgram& k, const std::string& name) {
  for (std::size_t i = 0; i < k.regions.size(); ++i)
    if (k.regions[i].name == name) return i;
  throw std::runtime_error("oracle: no region " + name);
}

inline Image input_image(const cgra::KernelProgram& k) {
  Image img;
  for (const auto& r : k.regions) {
    auto w = r.init;
    w.resize(r.words, 0);
    img.push_back(std::move(w));
  }
  return img;
}

// output[edge_start[i]] += weight[i] * feature[edge_end[i]], one feature
// element per node row of `feature_len` words.
inline Image gather(const cgra::KernelProgram& k, std::uint32_t feature_len = 1) {
  Image img = input_image(k);
  const auto& es = img[region_index(k, "edge_start")];
  const auto& ee = img[region_index(k, "edge_end")];
  const auto& w = img[region_index(k, "weight")];
  const auto& f = img[region_index(k, "feature")];
  auto& out = img[region_index(k, "output")];
  for (std::size_t i = 0; i < es.size(); ++i)
    out.at(std::size_t{es[i]} * feature_len) += w[i] * f.at(std::size_t{ee[i]} * feature_len);
  return img;
}

// Byte addresses the pattern kernel loads, in order.
inline std::vector<std::uint32_t> pattern_addresses(const cgra::AccessPatternSpec& s, std::uint32_t n) {
  std::vector<std::uint32_t> out;
  const std::uint32_t mask = s.range_bytes - 1;
  const std::uint32_t key = hash_key(s.seed);
  std::uint32_t off = 0;
  for (std::uint32_t k = 0; k < n; ++k) {
    std::uint32_t a = 0;
    switch (s.kind) {
      case cgra::PatternKind::Constant: a = s.base; break;
      case cgra::PatternKind::Linear: a = s.base + static_cast<std::uint32_t>(s.stride) * k; break;
      case cgra::PatternKind::Strided: {
        std::uint32_t stair = k;
        for (std::uint32_t r = s.run; r > 1; r >>= 1) stair >>= 1;
        a = s.base + ((stair * s.step) & mask & ~3u);
        break;
      }
      case cgra::PatternKind::RandomUniform:
        a = s.base + (counter_hash(k, key) % (s.range_bytes / 4)) * 4;
        break;
      case cgra::PatternKind::IrregularStep:
        off = (off + 4 * (1 + counter_hash(k, key) % s.max_step)) % s.range_bytes;
        a = s.base + off;
        break;
      case cgra::PatternKind::Mixed:
        a = s.base + ((k % 2 == 0) ? (4 * (k / 2)) % s.range_bytes : (counter_hash(k, key) % (s.range_bytes / 4)) * 4);
        break;
    }
    out.push_back(a);
  }
  return out;
}

// Checksum acc = acc*31 + value over a load stream, stored to `acc_region`.
inline void fold_stream(const cgra::KernelProgram& k, Image& img, const std::string& data_region,
                        const std::string& acc_region, const std::vector<std::uint32_t>& addrs) {
  const auto di = region_index(k, data_region);
  std::uint32_t acc = 0;
  for (auto a : addrs) acc = acc * 31u + img[di].at((a - k.regions[di].base) / 4);
  img[region_index(k, acc_region)][0] = acc;
}

inline Image pattern(const cgra::KernelProgram& k, const cgra::AccessPatternSpec& s, std::uint32_t n) {
  Image img = input_image(k);
  fold_stream(k, img, "data", "acc", pattern_addresses(s, n));
  return img;
}

inline Image radix_hist(const cgra::KernelProgram& k, std::uint32_t buckets, std::uint32_t shift) {
  Image img = input_image(k);
  auto& hist = img[region_index(k, "hist")];
  for (auto key : img[region_index(k, "keys")]) ++hist.at((key >> shift) % buckets);
  return img;
}

}  // namespace oracle

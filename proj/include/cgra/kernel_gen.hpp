#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cgra/kernel.hpp"

namespace cgra {

// Region placement for generated kernels starts here; consecutive regions
// are separated by a 16-byte guard so streams do not share line alignment.
inline constexpr Addr kDataBase = 0x1000;

// Edge-parallel gather/accumulate:
//   out[edge_start[i] * F] += weight[i] * feature[edge_end[i] * F]
// where F = feature_len words per node. II = 4, two pipeline stages.
KernelProgram gen_gather_kernel(std::uint32_t num_edges, std::uint32_t num_nodes, std::uint64_t seed,
                                std::uint32_t grid_rows = 4, std::uint32_t grid_cols = 4,
                                std::uint32_t feature_len = 1);
// Same kernel over a supplied edge list (weights from the list, features seeded).
KernelProgram gen_gather_from_edges(const std::vector<Edge>& edges, std::uint32_t num_nodes,
                                    std::uint64_t seed, std::uint32_t grid_rows = 4,
                                    std::uint32_t grid_cols = 4, std::uint32_t feature_len = 1);

enum class PatternKind : std::uint8_t { Constant, Linear, Strided, RandomUniform, IrregularStep, Mixed };

std::string_view pattern_name(PatternKind k);
PatternKind parse_pattern(std::string_view s);

struct AccessPatternSpec {
  PatternKind kind = PatternKind::Linear;
  Addr base = kDataBase;
  std::uint32_t range_bytes = 16384;  // power of two; data window for non-linear kinds
  std::int32_t stride = 4;            // linear
  std::uint32_t run = 1;              // strided: accesses per stair (power of two)
  std::uint32_t step = 64;            // strided: bytes per stair
  std::uint32_t max_step = 16;        // irregular-step: words, power of two
  std::uint64_t seed = 1;
};

// Hash key used by the random-uniform, irregular-step and mixed kinds.
std::uint32_t pattern_key(std::uint64_t seed);

// One load stream on PE (0,0). Each iteration folds the loaded word into a
// checksum (acc = acc * 31 + v) kept in the one-word SPM region "acc".
KernelProgram gen_pattern_kernel(const AccessPatternSpec& spec, std::uint32_t length);

// hist[(key >> shift) & (buckets - 1)] += 1 over `num_keys` seeded keys.
KernelProgram gen_radix_hist_kernel(std::uint32_t num_keys, std::uint32_t buckets, std::uint32_t shift,
                                    std::uint64_t seed);

// A linear stream (row 0, virtual SPM 0) next to a random stream over
// `random_bytes` (row 2, virtual SPM 1).
KernelProgram gen_mix_kernel(std::uint32_t length, std::uint32_t random_bytes, std::uint64_t seed);

// Four independent random streams on rows 0-3 whose loads share a context.
KernelProgram gen_quad_kernel(std::uint32_t length, std::uint32_t stream_bytes, std::uint64_t seed);

// Cycles through `blocks` addresses `stride` bytes apart (same L1 set).
KernelProgram gen_conflict_kernel(std::uint32_t length, std::uint32_t blocks, std::uint32_t stride,
                                  std::uint64_t seed);

struct BuiltinParams {
  std::uint32_t edges = 10000;
  std::uint32_t nodes = 256;
  std::uint32_t feature_len = 1;
  std::uint32_t length = 4096;
  std::uint32_t footprint = 16384;
  PatternKind pattern = PatternKind::Linear;
  std::int32_t stride = 4;
  std::uint64_t seed = 1;
  std::string edge_list;  // path; used by gather when non-empty
};

// Names: gather, pattern, radix-hist, mix, quad, conflict.
KernelProgram make_builtin(std::string_view name, const BuiltinParams& p);
const std::vector<std::string>& builtin_names();

}  // namespace cgra

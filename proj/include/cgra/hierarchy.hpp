#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cgra/cache_unit.hpp"
#include "cgra/kernel.hpp"
#include "cgra/l2_cache.hpp"

namespace cgra {

struct HierarchyConfig {
  std::string preset = "base";
  std::uint32_t grid_rows = 4;
  std::uint32_t grid_cols = 4;
  std::uint32_t num_vspm = 2;
  std::uint32_t rows_per_vspm = 2;   // consecutive edge PEs sharing one virtual SPM
  std::uint32_t spm_bytes = 512;     // per virtual SPM
  std::uint32_t l1_count = 1;
  std::uint32_t l1_size = 4096;      // per L1
  std::uint32_t l1_line = 32;
  std::uint32_t l1_ways = 4;         // per L1
  std::uint32_t mshr = 16;           // per L1
  std::uint32_t store_buffer = 16;   // per L1
  std::uint32_t l1_hit_latency = 1;
  std::uint32_t temp_store_bytes = 512;
  L2Geometry l2;

  // Throws ConfigError on inconsistent geometry.
  void validate() const;
  // Single line capturing every field, for reproducibility logs.
  std::string describe() const;

  std::uint32_t total_ways() const { return l1_count * l1_ways; }
  std::uint32_t phys_sets() const { return l1_size / (kPhysLineBytes * l1_ways); }
};

// Named hardware setups: "base", "runahead", "reconfig".
HierarchyConfig preset_config(std::string_view name);

// Sets one field by name (as used in config files and on the command line).
// `l1_line` also sets the L2 line.
void apply_setting(HierarchyConfig& cfg, std::string_view key, std::string_view value);

// `key = value` lines, '#' comments. A `preset` line, if present, must come first.
HierarchyConfig parse_config(std::string_view text);

struct Route {
  enum class Kind : std::uint8_t { Spm, Cache, Fault };
  Kind kind = Kind::Fault;
  std::uint32_t vspm = 0;
  std::uint32_t partition = 0;
  int region = -1;
};

using MemoryImage = std::vector<std::vector<Word>>;  // one entry per kernel region

// Owns SPMs, the L1 way pool, L2 and the backing store for one simulation,
// and decides where each edge-PE access goes.
class MemorySystem {
 public:
  MemorySystem(const HierarchyConfig& cfg, const KernelProgram& program);

  std::uint32_t vspm_of_row(std::uint32_t row) const { return row / cfg_.rows_per_vspm; }
  std::uint32_t partition_of_vspm(std::uint32_t v) const { return v * cfg_.l1_count / cfg_.num_vspm; }
  Route route(std::uint32_t row, Addr addr) const;

  bool region_in_spm(std::size_t region) const { return in_spm_.at(region); }
  Word spm_read(int region, Addr addr) const;
  void spm_write(int region, Addr addr, Word v);

  CacheUnit& l1() { return *l1_; }
  const CacheUnit& l1() const { return *l1_; }
  L2Cache& l2() { return *l2_; }
  const L2Cache& l2() const { return *l2_; }
  BackingStore& backing() { return backing_; }
  const HierarchyConfig& config() const { return cfg_; }

  // Pushes all dirty data down to the backing store and reads every region.
  MemoryImage final_image();

 private:
  HierarchyConfig cfg_;
  const KernelProgram& prog_;
  BackingStore backing_;
  std::unique_ptr<L2Cache> l2_;
  std::unique_ptr<CacheUnit> l1_;
  std::vector<bool> in_spm_;
  std::vector<std::vector<Word>> spm_;  // per region, empty unless resident
};

// Greedy SPM placement in declaration order: a region tagged `spm` is made
// resident when it still fits in its virtual SPM.
std::vector<bool> place_regions(const KernelProgram& k, const HierarchyConfig& cfg);

std::uint64_t image_digest(const MemoryImage& image);
MemoryImage initial_image(const KernelProgram& k);

}  // namespace cgra

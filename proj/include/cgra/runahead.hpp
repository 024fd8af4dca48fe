#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cgra/cache_unit.hpp"
#include "cgra/hierarchy.hpp"
#include "cgra/pe_array.hpp"

namespace cgra {

// Scratch area for stores executed while running ahead. Word-granular,
// FIFO replacement when full. Never written back anywhere.
class TempStore {
 public:
  explicit TempStore(std::uint32_t capacity_bytes);

  std::optional<Word> find(Addr a) const;
  void write(Addr a, Word v);
  void clear();

  std::size_t size() const { return map_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t evictions() const { return evictions_; }
  // Reads that missed here but hit an address whose value had been evicted.
  std::uint64_t lost_reads() const { return lost_reads_; }

 private:
  std::size_t capacity_;
  std::unordered_map<Addr, Word> map_;
  std::deque<Addr> order_;
  std::unordered_map<Addr, bool> evicted_;
  std::uint64_t evictions_ = 0;
  mutable std::uint64_t lost_reads_ = 0;
};

struct RunaheadEpisode {
  std::vector<std::uint64_t> trigger_tokens;
  Cycle entry_cycle = 0;
  Cycle exit_cycle = 0;
  std::uint32_t prefetches = 0;
  std::uint32_t lost_reads = 0;
};

// Drives the array through a runahead episode: speculative loads/stores go
// to the temp store, SPM or L1 probes, and L1 misses turn into prefetches.
class RunaheadController {
 public:
  RunaheadController(MemorySystem& mem, std::uint32_t temp_store_bytes);

  bool active() const { return active_; }
  // Snapshot the array, poison pending load destinations, remember triggers.
  void enter(PEArray& array, Cycle now);
  TaggedWord load(std::uint32_t row, TaggedWord addr, Cycle now);
  void store(std::uint32_t row, TaggedWord addr, TaggedWord data, Cycle now);
  // Completion for a trigger load that arrived while running ahead.
  void hold(const Completion& c);
  // Leaves runahead once every trigger has its data. Returns true on exit.
  bool maybe_exit(PEArray& array, Cycle now);

  const std::vector<RunaheadEpisode>& episodes() const { return episodes_; }
  std::uint64_t runahead_cycles() const { return ra_cycles_; }
  void count_cycle() { ++ra_cycles_; }

 private:
  void prefetch(const Route& rt, Addr addr, Cycle now);

  MemorySystem& mem_;
  TempStore temp_;
  bool active_ = false;
  RunaheadEpisode cur_;
  std::vector<Completion> held_;
  std::vector<RunaheadEpisode> episodes_;
  std::uint64_t ra_cycles_ = 0;
  std::uint64_t lost_base_ = 0;
};

struct PrefetchSummary {
  std::uint64_t total = 0;
  std::uint64_t used = 0;
  std::uint64_t evicted = 0;
  std::uint64_t useless = 0;
  std::uint64_t demand_misses = 0;  // remaining Normal-mode misses
  double accuracy = 1.0;            // 1 - useless / total
  double coverage = 0.0;            // used / (used + demand misses)
};

// Post-hoc classification from the cache's prefetch event log:
//   Used    - a Normal demand touched the block while prefetched or in flight
//   Evicted - evicted untouched and demanded afterwards
//   Useless - everything else
PrefetchSummary classify_prefetches(const std::vector<PrefetchEvent>& log,
                                    std::uint64_t demand_misses);

}  // namespace cgra

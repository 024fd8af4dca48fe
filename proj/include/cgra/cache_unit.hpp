#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "cgra/l2_cache.hpp"
#include "cgra/types.hpp"

namespace cgra {

inline constexpr Addr kPhysLineBytes = 16;
inline constexpr std::uint32_t kNoPartition = 0xFFFFFFFFu;

// Line sizes a partition may be configured with, before capping by the L2
// line and by the set count.
inline constexpr std::array<std::uint32_t, 4> kLineSizes = {16, 32, 64, 128};

struct CacheGeometry {
  std::uint32_t phys_sets = 64;
  std::uint32_t total_ways = 4;
  std::uint32_t partitions = 1;
  std::uint32_t mshr_entries = 16;
  std::uint32_t store_buffer_slots = 16;
  std::uint32_t max_line = 128;  // L2 line size
};

struct MshrEntry {
  bool valid = false;
  Addr block = 0;
  bool issued = false;
  bool prefetch = false;  // allocated by runahead and not yet demanded
  bool bypass = false;    // partition owns no ways: data is not installed
  Cycle ready = 0;
  std::vector<std::uint8_t> data;  // snapshot of the block at allocation
};

struct LoadStoreEntry {
  enum class Kind : std::uint8_t { Read, Write, Prefetch };
  std::uint32_t mshr = 0;
  Kind kind = Kind::Read;
  std::uint32_t offset = 0;  // byte offset within the block
  std::uint64_t token = 0;   // consumer of a read
  std::uint32_t sb_slot = 0; // store-buffer slot of a write
};

struct StoreBufferSlot {
  bool valid = false;
  Word value = 0;
};

struct Completion {
  std::uint64_t token = 0;
  Word value = 0;
  std::uint32_t partition = 0;
};

enum class AccessOutcome : std::uint8_t {
  Hit,
  MissAllocated,
  MissMerged,
  MshrFull,
  StoreBufferFull,
  Dropped,  // prefetch that found no MSHR, or already pending
};

struct AccessResult {
  AccessOutcome outcome = AccessOutcome::Hit;
  Word data = 0;
  int mshr = -1;
};

struct CacheStats {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t demand_misses = 0;
  std::uint64_t mshr_allocs = 0;  // every block request sent towards L2
  std::uint64_t prefetch_allocs = 0;
  std::uint64_t prefetch_dropped = 0;
  std::uint64_t late_prefetch_hits = 0;
  std::uint64_t writebacks = 0;   // dirty physical lines written to L2
  std::uint64_t bypass_stores = 0;
};

struct PrefetchEvent {
  enum class Kind : std::uint8_t { Issued, LateUse, Installed, DemandHit, Evicted, DemandMiss };
  Kind kind;
  std::uint32_t partition;
  Addr block;
  Cycle cycle;
};

// The pool of L1 ways shared by all virtual SPMs. Ways are handed to
// partitions through per-way permission registers; each partition chooses
// its own virtual line (2^m physical lines) and owns its MSHRs, Load/Store
// Table and Store Buffer.
class CacheUnit {
 public:
  CacheUnit(const CacheGeometry& g, L2Cache& l2);

  // Initial layout: `ways` consecutive ways per partition, starting at way 0.
  void configure(const std::vector<std::uint32_t>& ways, const std::vector<std::uint32_t>& lines);

  // Demand word accesses. `token` identifies the consumer of a load.
  AccessResult load(std::uint32_t part, Addr addr, std::uint64_t token, Cycle now);
  AccessResult store(std::uint32_t part, Addr addr, Word value, Cycle now);
  // Runahead read: Hit returns data; a miss becomes a prefetch if an MSHR is
  // free and the block is not already pending (otherwise Dropped).
  AccessResult prefetch(std::uint32_t part, Addr addr, Cycle now);

  // Sends at most one waiting MSHR per partition to L2.
  void issue(Cycle now);
  // Retires every MSHR whose data has arrived by `now`.
  std::vector<Completion> fill(Cycle now);

  // Timing-free access sharing lookup, victim choice and install with the
  // timed path. Does not move data. Returns true on hit.
  bool access_functional(std::uint32_t part, Addr addr, bool is_write);

  // Reassigns ways and line sizes. Requires no outstanding misses. Returns
  // the number of dirty physical lines written back.
  std::uint64_t apply_plan(const std::vector<std::uint32_t>& ways,
                           const std::vector<std::uint32_t>& lines);
  // Writes every dirty byte to L2 (lines stay valid and become clean).
  void flush();

  // Is the whole virtual line containing `addr` present?
  bool present(std::uint32_t part, Addr addr) const;
  bool pending(std::uint32_t part, Addr addr) const;
  bool quiescent() const;
  std::uint32_t outstanding(std::uint32_t part) const;
  bool store_buffer_empty(std::uint32_t part) const;

  std::uint32_t line_bytes(std::uint32_t part) const { return kPhysLineBytes << parts_.at(part).m; }
  std::uint32_t ways_of(std::uint32_t part) const;
  std::uint32_t way_owner(std::uint32_t way) const { return perm_.at(way); }
  std::vector<std::uint32_t> way_counts() const;
  std::vector<std::uint32_t> line_sizes() const;
  const CacheGeometry& geometry() const { return g_; }
  bool valid_line(std::uint32_t bytes) const;

  const CacheStats& stats(std::uint32_t part) const { return parts_.at(part).stats; }
  std::uint64_t partial_observations() const { return partial_; }
  std::uint64_t invalidated_lines() const { return invalidated_; }
  const std::vector<PrefetchEvent>& prefetch_log() const { return events_; }
  const std::vector<MshrEntry>& mshrs(std::uint32_t part) const { return parts_.at(part).mshr; }
  const std::vector<LoadStoreEntry>& lst(std::uint32_t part) const { return parts_.at(part).lst; }

  // Rejects stores while set (runahead containment).
  void set_store_guard(bool on) { store_guard_ = on; }

 private:
  struct PLine {
    bool valid = false;
    bool prefetched = false;  // installed by a prefetch, not yet demanded
    Addr tag = 0;
    std::uint16_t dirty = 0;  // per-byte
    std::uint64_t stamp = 0;  // meaningful on representative sets only
    std::array<std::uint8_t, kPhysLineBytes> data{};
  };
  struct Partition {
    std::uint32_t m = 0;
    std::vector<MshrEntry> mshr;
    std::deque<std::uint32_t> issue_queue;
    std::vector<LoadStoreEntry> lst;
    std::vector<StoreBufferSlot> sb;
    CacheStats stats;
  };

  PLine& line(std::uint32_t set, std::uint32_t way) { return lines_[std::size_t{set} * g_.total_ways + way]; }
  const PLine& line(std::uint32_t set, std::uint32_t way) const {
    return lines_[std::size_t{set} * g_.total_ways + way];
  }
  std::uint32_t set_of(Addr a) const { return (a / kPhysLineBytes) % g_.phys_sets; }
  Addr tag_of(Addr a) const { return (a / kPhysLineBytes) / g_.phys_sets; }
  std::uint32_t rep_set(std::uint32_t part, Addr a) const {
    return set_of(a) & ~((1u << parts_[part].m) - 1u);
  }
  Addr block_of(std::uint32_t part, Addr a) const { return a & ~(line_bytes(part) - 1u); }
  Addr phys_addr(std::uint32_t set, const PLine& l) const {
    return static_cast<Addr>((std::uint64_t{l.tag} * g_.phys_sets + set) * kPhysLineBytes);
  }

  // Way holding the block, or -1. Also audits full-hit/full-miss.
  int lookup(std::uint32_t part, Addr addr);
  int find_mshr(std::uint32_t part, Addr block) const;
  int free_mshr(std::uint32_t part) const;
  int free_sb(std::uint32_t part) const;
  int allocate_mshr(std::uint32_t part, Addr block, bool prefetch, bool bypass, Cycle now);
  void touch(std::uint32_t part, Addr addr, std::uint32_t way);
  std::uint32_t select_victim(std::uint32_t part, Addr addr) const;
  void evict(std::uint32_t part, std::uint32_t rep, std::uint32_t way, Cycle now, bool log);
  void install(std::uint32_t part, Addr block, std::uint32_t way, const std::uint8_t* data,
               bool prefetched, Cycle now);
  void write_back(std::uint32_t set, std::uint32_t way);
  void invalidate_way(std::uint32_t way);

  CacheGeometry g_;
  L2Cache& l2_;
  std::vector<PLine> lines_;
  std::vector<std::uint32_t> perm_;
  std::vector<Partition> parts_;
  std::uint64_t clock_ = 0;
  std::uint64_t partial_ = 0;
  std::uint64_t invalidated_ = 0;
  bool store_guard_ = false;
  std::vector<PrefetchEvent> events_;
};

}  // namespace cgra

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "cgra/types.hpp"

namespace cgra {

// Flat byte-addressed main memory, allocated lazily in 4 KB pages. Untouched
// bytes read as zero.
class BackingStore {
 public:
  static constexpr Addr kPageBytes = 4096;

  std::uint8_t read_byte(Addr a) const;
  void write_byte(Addr a, std::uint8_t v);
  void read(Addr a, std::uint8_t* out, std::size_t n) const;
  void write(Addr a, const std::uint8_t* in, std::size_t n);
  Word read_word(Addr a) const;
  void write_word(Addr a, Word v);

 private:
  using Page = std::array<std::uint8_t, kPageBytes>;
  std::unordered_map<Addr, std::unique_ptr<Page>> pages_;
};

struct L2Geometry {
  std::uint32_t size = 128 * 1024;
  std::uint32_t line = 64;
  std::uint32_t ways = 8;
  std::uint32_t hit_latency = 8;
  std::uint32_t miss_latency = 80;
};

struct L2Stats {
  std::uint64_t reads = 0;       // block requests from L1 MSHRs
  std::uint64_t read_hits = 0;
  std::uint64_t read_misses = 0; // == backing-store reads
  std::uint64_t writebacks_in = 0;
  std::uint64_t writebacks_out = 0;
};

// Shared, non-inclusive, write-back, write-allocate LRU cache in front of
// the backing store. Miss latency already includes the memory access.
class L2Cache {
 public:
  L2Cache(const L2Geometry& g, BackingStore& backing);

  // Timed block read on behalf of an L1 miss. Returns the latency until the
  // data reaches L1. A line whose own fill is still in flight answers no
  // sooner than that fill completes.
  std::uint32_t access(Addr addr, Cycle now);

  // Functional view of current memory contents (L2 copy if present, else
  // backing store). No state change.
  void peek(Addr addr, std::uint8_t* out, std::size_t n) const;

  // Functional masked write (L1 writeback or uncached store).
  void write(Addr addr, const std::uint8_t* in, const bool* mask, std::size_t n);

  // Trace-driven access for oracle checks: true on hit.
  bool access_functional(Addr addr, bool is_write);

  // Writes every dirty line to the backing store.
  void flush();

  const L2Stats& stats() const { return stats_; }
  const L2Geometry& geometry() const { return g_; }

 private:
  struct Line {
    bool valid = false;
    bool dirty = false;
    Addr tag = 0;
    std::uint64_t stamp = 0;
    Cycle ready = 0;
    std::vector<std::uint8_t> data;
  };

  std::size_t index(Addr addr) const { return (addr / g_.line) % sets_; }
  Addr tag_of(Addr addr) const { return addr / g_.line / sets_; }
  Line* find(Addr addr);
  const Line* find(Addr addr) const;
  Line& allocate(Addr addr, Cycle ready);

  L2Geometry g_;
  BackingStore& backing_;
  std::uint32_t sets_;
  std::vector<Line> lines_;  // sets_ * ways
  std::uint64_t clock_ = 0;
  L2Stats stats_;
};

}  // namespace cgra

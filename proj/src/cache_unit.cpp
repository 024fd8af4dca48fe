#include "cgra/cache_unit.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

namespace cgra {

namespace {

Word get_word(const std::uint8_t* p) {
  return Word{p[0]} | Word{p[1]} << 8 | Word{p[2]} << 16 | Word{p[3]} << 24;
}

void put_word(std::uint8_t* p, Word v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

CacheUnit::CacheUnit(const CacheGeometry& g, L2Cache& l2) : g_(g), l2_(l2) {
  if (!is_pow2(g.phys_sets)) throw ConfigError("L1 set count must be a power of two");
  if (g.total_ways == 0) throw ConfigError("L1 needs at least one way");
  if (g.partitions == 0) throw ConfigError("L1 needs at least one partition");
  if (g.mshr_entries == 0) throw ConfigError("MSHR entries must be positive");
  if (g.store_buffer_slots == 0) throw ConfigError("store buffer needs at least one slot");
  lines_.resize(std::size_t{g.phys_sets} * g.total_ways);
  perm_.assign(g.total_ways, kNoPartition);
  parts_.resize(g.partitions);
  for (auto& p : parts_) {
    p.mshr.resize(g.mshr_entries);
    p.sb.resize(g.store_buffer_slots);
  }
}

bool CacheUnit::valid_line(std::uint32_t bytes) const {
  return std::find(kLineSizes.begin(), kLineSizes.end(), bytes) != kLineSizes.end() &&
         bytes <= g_.max_line && bytes / kPhysLineBytes <= g_.phys_sets;
}

void CacheUnit::configure(const std::vector<std::uint32_t>& ways,
                          const std::vector<std::uint32_t>& lines) {
  if (ways.size() != g_.partitions || lines.size() != g_.partitions)
    throw ConfigError("cache layout needs one entry per partition");
  if (std::accumulate(ways.begin(), ways.end(), std::uint64_t{0}) > g_.total_ways)
    throw ConfigError("way allocation exceeds the pool");
  std::fill(perm_.begin(), perm_.end(), kNoPartition);
  std::uint32_t w = 0;
  for (std::uint32_t p = 0; p < g_.partitions; ++p) {
    if (!valid_line(lines[p])) throw ConfigError("unsupported L1 line size " + std::to_string(lines[p]));
    parts_[p].m = log2_exact(lines[p] / kPhysLineBytes);
    for (std::uint32_t k = 0; k < ways[p]; ++k) perm_[w++] = p;
  }
  for (auto& l : lines_) l = PLine{};
}

std::uint32_t CacheUnit::ways_of(std::uint32_t part) const {
  return static_cast<std::uint32_t>(std::count(perm_.begin(), perm_.end(), part));
}

std::vector<std::uint32_t> CacheUnit::way_counts() const {
  std::vector<std::uint32_t> v(g_.partitions, 0);
  for (auto p : perm_)
    if (p != kNoPartition) ++v[p];
  return v;
}

std::vector<std::uint32_t> CacheUnit::line_sizes() const {
  std::vector<std::uint32_t> v;
  for (std::uint32_t p = 0; p < g_.partitions; ++p) v.push_back(line_bytes(p));
  return v;
}

int CacheUnit::lookup(std::uint32_t part, Addr addr) {
  const std::uint32_t n = 1u << parts_[part].m;
  const std::uint32_t rep = rep_set(part, addr);
  const Addr tag = tag_of(addr);
  int hit = -1;
  for (std::uint32_t w = 0; w < g_.total_ways; ++w) {
    if (perm_[w] != part) continue;
    std::uint32_t cnt = 0;
    for (std::uint32_t j = 0; j < n; ++j) {
      const PLine& l = line(rep + j, w);
      if (l.valid && l.tag == tag) ++cnt;
    }
    if (cnt != 0 && cnt != n) ++partial_;
    if (cnt == n && hit < 0) hit = static_cast<int>(w);
  }
  return hit;
}

bool CacheUnit::present(std::uint32_t part, Addr addr) const {
  const std::uint32_t n = 1u << parts_[part].m;
  const std::uint32_t rep = rep_set(part, addr);
  const Addr tag = tag_of(addr);
  for (std::uint32_t w = 0; w < g_.total_ways; ++w) {
    if (perm_[w] != part) continue;
    bool all = true;
    for (std::uint32_t j = 0; j < n && all; ++j) {
      const PLine& l = line(rep + j, w);
      all = l.valid && l.tag == tag;
    }
    if (all) return true;
  }
  return false;
}

bool CacheUnit::pending(std::uint32_t part, Addr addr) const {
  return find_mshr(part, block_of(part, addr)) >= 0;
}

int CacheUnit::find_mshr(std::uint32_t part, Addr block) const {
  const auto& m = parts_[part].mshr;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].valid && !m[i].bypass && m[i].block == block) return static_cast<int>(i);
  return -1;
}

int CacheUnit::free_mshr(std::uint32_t part) const {
  const auto& m = parts_[part].mshr;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m[i].valid) return static_cast<int>(i);
  return -1;
}

int CacheUnit::free_sb(std::uint32_t part) const {
  const auto& sb = parts_[part].sb;
  for (std::size_t i = 0; i < sb.size(); ++i)
    if (!sb[i].valid) return static_cast<int>(i);
  return -1;
}

int CacheUnit::allocate_mshr(std::uint32_t part, Addr block, bool prefetch, bool bypass, Cycle) {
  const int idx = free_mshr(part);
  auto& P = parts_[part];
  MshrEntry& e = P.mshr[static_cast<std::size_t>(idx)];
  e.valid = true;
  e.block = block;
  e.issued = false;
  e.prefetch = prefetch;
  e.bypass = bypass;
  e.ready = 0;
  e.data.resize(line_bytes(part));
  l2_.peek(block, e.data.data(), e.data.size());
  P.issue_queue.push_back(static_cast<std::uint32_t>(idx));
  ++P.stats.mshr_allocs;
  return idx;
}

void CacheUnit::touch(std::uint32_t part, Addr addr, std::uint32_t way) {
  line(rep_set(part, addr), way).stamp = ++clock_;
}

std::uint32_t CacheUnit::select_victim(std::uint32_t part, Addr addr) const {
  const std::uint32_t rep = rep_set(part, addr);
  int best = -1;
  for (std::uint32_t w = 0; w < g_.total_ways; ++w) {
    if (perm_[w] != part) continue;
    const PLine& l = line(rep, w);
    if (!l.valid) return w;
    if (best < 0 || l.stamp < line(rep, static_cast<std::uint32_t>(best)).stamp) best = static_cast<int>(w);
  }
  if (best < 0) throw SimulationError("victim requested for a partition without ways");
  return static_cast<std::uint32_t>(best);
}

void CacheUnit::write_back(std::uint32_t set, std::uint32_t way) {
  PLine& l = line(set, way);
  if (!l.valid || l.dirty == 0) return;
  bool mask[kPhysLineBytes];
  for (std::uint32_t b = 0; b < kPhysLineBytes; ++b) mask[b] = (l.dirty >> b) & 1u;
  l2_.write(phys_addr(set, l), l.data.data(), mask, kPhysLineBytes);
  l.dirty = 0;
  if (perm_[way] != kNoPartition) ++parts_[perm_[way]].stats.writebacks;
}

void CacheUnit::evict(std::uint32_t part, std::uint32_t rep, std::uint32_t way, Cycle now, bool log) {
  const std::uint32_t n = 1u << parts_[part].m;
  PLine& head = line(rep, way);
  if (log && head.valid && head.prefetched)
    events_.push_back({PrefetchEvent::Kind::Evicted, part, phys_addr(rep, head), now});
  for (std::uint32_t j = 0; j < n; ++j) {
    write_back(rep + j, way);
    line(rep + j, way) = PLine{};
  }
}

void CacheUnit::install(std::uint32_t part, Addr block, std::uint32_t way, const std::uint8_t* data,
                        bool prefetched, Cycle) {
  const std::uint32_t n = 1u << parts_[part].m;
  const std::uint32_t rep = set_of(block);
  const Addr tag = tag_of(block);
  for (std::uint32_t j = 0; j < n; ++j) {
    PLine& l = line(rep + j, way);
    l.valid = true;
    l.prefetched = prefetched;
    l.tag = tag;
    l.dirty = 0;
    std::memcpy(l.data.data(), data + j * kPhysLineBytes, kPhysLineBytes);
  }
  line(rep, way).stamp = ++clock_;
}

AccessResult CacheUnit::load(std::uint32_t part, Addr addr, std::uint64_t token, Cycle now) {
  auto& P = parts_.at(part);
  if (addr % kWordBytes != 0) throw SimulationError("misaligned load");
  const int way = lookup(part, addr);
  if (way >= 0) {
    ++P.stats.accesses;
    ++P.stats.hits;
    const auto w = static_cast<std::uint32_t>(way);
    touch(part, addr, w);
    PLine& head = line(rep_set(part, addr), w);
    if (head.prefetched) {
      events_.push_back({PrefetchEvent::Kind::DemandHit, part, block_of(part, addr), now});
      head.prefetched = false;
    }
    return {AccessOutcome::Hit, get_word(line(set_of(addr), w).data.data() + addr % kPhysLineBytes), way};
  }
  const Addr block = block_of(part, addr);
  const std::uint32_t offset = addr - block;
  const bool bypass = ways_of(part) == 0;
  int idx = bypass ? -1 : find_mshr(part, block);
  AccessOutcome outcome = AccessOutcome::MissMerged;
  if (idx >= 0) {
    auto& e = P.mshr[static_cast<std::size_t>(idx)];
    if (e.prefetch) {
      e.prefetch = false;
      ++P.stats.late_prefetch_hits;
      events_.push_back({PrefetchEvent::Kind::LateUse, part, block, now});
    } else {
      ++P.stats.demand_misses;
    }
  } else {
    if (free_mshr(part) < 0) return {AccessOutcome::MshrFull, 0, -1};
    idx = allocate_mshr(part, block, false, bypass, now);
    ++P.stats.demand_misses;
    events_.push_back({PrefetchEvent::Kind::DemandMiss, part, block, now});
    outcome = AccessOutcome::MissAllocated;
  }
  ++P.stats.accesses;
  P.lst.push_back({static_cast<std::uint32_t>(idx), LoadStoreEntry::Kind::Read, offset, token, 0});
  return {outcome, 0, idx};
}

AccessResult CacheUnit::store(std::uint32_t part, Addr addr, Word value, Cycle now) {
  if (store_guard_) throw SimulationError("architectural store attempted during runahead");
  auto& P = parts_.at(part);
  if (addr % kWordBytes != 0) throw SimulationError("misaligned store");
  const int way = lookup(part, addr);
  if (way >= 0) {
    ++P.stats.accesses;
    ++P.stats.hits;
    const auto w = static_cast<std::uint32_t>(way);
    touch(part, addr, w);
    PLine& head = line(rep_set(part, addr), w);
    if (head.prefetched) {
      events_.push_back({PrefetchEvent::Kind::DemandHit, part, block_of(part, addr), now});
      head.prefetched = false;
    }
    PLine& l = line(set_of(addr), w);
    const std::uint32_t off = addr % kPhysLineBytes;
    put_word(l.data.data() + off, value);
    l.dirty |= static_cast<std::uint16_t>(0xFu << off);
    return {AccessOutcome::Hit, 0, way};
  }
  if (ways_of(part) == 0) {
    std::uint8_t b[4];
    put_word(b, value);
    l2_.write(addr, b, nullptr, 4);
    ++P.stats.accesses;
    ++P.stats.demand_misses;
    ++P.stats.bypass_stores;
    return {AccessOutcome::MissAllocated, 0, -1};
  }
  const Addr block = block_of(part, addr);
  const int slot = free_sb(part);
  if (slot < 0) return {AccessOutcome::StoreBufferFull, 0, -1};
  int idx = find_mshr(part, block);
  AccessOutcome outcome = AccessOutcome::MissMerged;
  if (idx >= 0) {
    auto& e = P.mshr[static_cast<std::size_t>(idx)];
    if (e.prefetch) {
      e.prefetch = false;
      ++P.stats.late_prefetch_hits;
      events_.push_back({PrefetchEvent::Kind::LateUse, part, block, now});
    } else {
      ++P.stats.demand_misses;
    }
  } else {
    if (free_mshr(part) < 0) return {AccessOutcome::MshrFull, 0, -1};
    idx = allocate_mshr(part, block, false, false, now);
    ++P.stats.demand_misses;
    events_.push_back({PrefetchEvent::Kind::DemandMiss, part, block, now});
    outcome = AccessOutcome::MissAllocated;
  }
  ++P.stats.accesses;
  P.sb[static_cast<std::size_t>(slot)] = {true, value};
  P.lst.push_back({static_cast<std::uint32_t>(idx), LoadStoreEntry::Kind::Write, addr - block, 0,
                   static_cast<std::uint32_t>(slot)});
  return {outcome, 0, idx};
}

AccessResult CacheUnit::prefetch(std::uint32_t part, Addr addr, Cycle now) {
  auto& P = parts_.at(part);
  ++P.stats.accesses;
  const int way = lookup(part, addr);
  if (way >= 0) {
    ++P.stats.hits;
    const auto w = static_cast<std::uint32_t>(way);
    touch(part, addr, w);
    return {AccessOutcome::Hit, get_word(line(set_of(addr), w).data.data() + addr % kPhysLineBytes), way};
  }
  const Addr block = block_of(part, addr);
  if (find_mshr(part, block) >= 0) return {AccessOutcome::Dropped, 0, -1};
  if (ways_of(part) == 0 || free_mshr(part) < 0) {
    ++P.stats.prefetch_dropped;
    return {AccessOutcome::Dropped, 0, -1};
  }
  const int idx = allocate_mshr(part, block, true, false, now);
  ++P.stats.prefetch_allocs;
  events_.push_back({PrefetchEvent::Kind::Issued, part, block, now});
  P.lst.push_back({static_cast<std::uint32_t>(idx), LoadStoreEntry::Kind::Prefetch, addr - block, 0, 0});
  return {AccessOutcome::MissAllocated, 0, idx};
}

void CacheUnit::issue(Cycle now) {
  for (auto& P : parts_) {
    while (!P.issue_queue.empty()) {
      const auto idx = P.issue_queue.front();
      P.issue_queue.pop_front();
      MshrEntry& e = P.mshr[idx];
      if (!e.valid || e.issued) continue;
      e.issued = true;
      e.ready = now + l2_.access(e.block, now);
      break;
    }
  }
}

std::vector<Completion> CacheUnit::fill(Cycle now) {
  std::vector<Completion> out;
  for (std::uint32_t p = 0; p < g_.partitions; ++p) {
    auto& P = parts_[p];
    for (std::uint32_t idx = 0; idx < P.mshr.size(); ++idx) {
      MshrEntry& e = P.mshr[idx];
      if (!e.valid || !e.issued || e.ready > now) continue;
      int way = -1;
      std::uint32_t rep = 0;
      if (!e.bypass) {
        rep = set_of(e.block);
        way = static_cast<int>(select_victim(p, e.block));
        evict(p, rep, static_cast<std::uint32_t>(way), now, true);
        install(p, e.block, static_cast<std::uint32_t>(way), e.data.data(), e.prefetch, now);
        if (e.prefetch) events_.push_back({PrefetchEvent::Kind::Installed, p, e.block, now});
      }
      // Entries retire in the order they were recorded, so a read sees exactly
      // the writes that preceded it.
      std::vector<LoadStoreEntry> keep;
      keep.reserve(P.lst.size());
      for (const auto& le : P.lst) {
        if (le.mshr != idx) {
          keep.push_back(le);
          continue;
        }
        std::uint8_t* bytes = nullptr;
        PLine* pl = nullptr;
        if (way >= 0) {
          pl = &line(rep + le.offset / kPhysLineBytes, static_cast<std::uint32_t>(way));
          bytes = pl->data.data() + le.offset % kPhysLineBytes;
        } else {
          bytes = e.data.data() + le.offset;
        }
        switch (le.kind) {
          case LoadStoreEntry::Kind::Read:
            out.push_back({le.token, get_word(bytes), p});
            break;
          case LoadStoreEntry::Kind::Write: {
            auto& slot = P.sb[le.sb_slot];
            put_word(bytes, slot.value);
            if (pl) pl->dirty |= static_cast<std::uint16_t>(0xFu << (le.offset % kPhysLineBytes));
            slot.valid = false;
            break;
          }
          case LoadStoreEntry::Kind::Prefetch:
            break;
        }
      }
      P.lst.swap(keep);
      e.valid = false;
      e.issued = false;
      e.data.clear();
    }
  }
  return out;
}

bool CacheUnit::access_functional(std::uint32_t part, Addr addr, bool /*is_write*/) {
  const int way = lookup(part, addr);
  if (way >= 0) {
    touch(part, addr, static_cast<std::uint32_t>(way));
    return true;
  }
  if (ways_of(part) == 0) return false;
  const Addr block = block_of(part, addr);
  std::vector<std::uint8_t> data(line_bytes(part));
  l2_.peek(block, data.data(), data.size());
  const std::uint32_t w = select_victim(part, block);
  evict(part, set_of(block), w, 0, false);
  install(part, block, w, data.data(), false, 0);
  return false;
}

void CacheUnit::invalidate_way(std::uint32_t way) {
  for (std::uint32_t s = 0; s < g_.phys_sets; ++s) {
    PLine& l = line(s, way);
    if (!l.valid) continue;
    write_back(s, way);
    l = PLine{};
    ++invalidated_;
  }
}

std::uint64_t CacheUnit::apply_plan(const std::vector<std::uint32_t>& ways,
                                    const std::vector<std::uint32_t>& lines) {
  if (ways.size() != g_.partitions || lines.size() != g_.partitions)
    throw ConfigError("plan needs one entry per partition");
  if (std::accumulate(ways.begin(), ways.end(), std::uint64_t{0}) > g_.total_ways)
    throw ConfigError("plan exceeds the way budget");
  for (auto l : lines)
    if (!valid_line(l)) throw ConfigError("plan uses unsupported line size " + std::to_string(l));
  if (!quiescent()) throw SimulationError("reconfiguration with outstanding misses");

  // Keep as many currently owned ways as possible; hand out the rest.
  std::vector<std::uint32_t> next(g_.total_ways, kNoPartition);
  std::vector<std::uint32_t> kept(g_.partitions, 0);
  for (std::uint32_t w = 0; w < g_.total_ways; ++w) {
    const auto p = perm_[w];
    if (p != kNoPartition && kept[p] < ways[p]) {
      next[w] = p;
      ++kept[p];
    }
  }
  std::uint32_t w = 0;
  for (std::uint32_t p = 0; p < g_.partitions; ++p) {
    while (kept[p] < ways[p]) {
      while (next[w] != kNoPartition) ++w;
      next[w] = p;
      ++kept[p];
    }
  }

  std::uint64_t dirty = 0;
  auto count_dirty = [&](std::uint32_t way) {
    for (std::uint32_t s = 0; s < g_.phys_sets; ++s) {
      const PLine& l = line(s, way);
      if (l.valid && l.dirty != 0) ++dirty;
    }
  };
  for (std::uint32_t way = 0; way < g_.total_ways; ++way) {
    const bool moved = next[way] != perm_[way];
    const bool reshaped = !moved && perm_[way] != kNoPartition &&
                          lines[perm_[way]] != line_bytes(perm_[way]);
    if (moved || reshaped) {
      count_dirty(way);
      invalidate_way(way);
    }
  }
  perm_ = next;
  for (std::uint32_t p = 0; p < g_.partitions; ++p) parts_[p].m = log2_exact(lines[p] / kPhysLineBytes);
  for (auto& l : lines_) l.stamp = 0;
  return dirty;
}

void CacheUnit::flush() {
  for (std::uint32_t s = 0; s < g_.phys_sets; ++s)
    for (std::uint32_t w = 0; w < g_.total_ways; ++w) write_back(s, w);
}

bool CacheUnit::quiescent() const {
  for (std::uint32_t p = 0; p < g_.partitions; ++p)
    if (outstanding(p) != 0 || !store_buffer_empty(p)) return false;
  return true;
}

std::uint32_t CacheUnit::outstanding(std::uint32_t part) const {
  const auto& m = parts_.at(part).mshr;
  return static_cast<std::uint32_t>(std::count_if(m.begin(), m.end(), [](const MshrEntry& e) { return e.valid; }));
}

bool CacheUnit::store_buffer_empty(std::uint32_t part) const {
  const auto& sb = parts_.at(part).sb;
  return std::none_of(sb.begin(), sb.end(), [](const StoreBufferSlot& s) { return s.valid; });
}

}  // namespace cgra

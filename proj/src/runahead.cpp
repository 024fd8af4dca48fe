#include "cgra/runahead.hpp"

#include <map>

namespace cgra {

TempStore::TempStore(std::uint32_t capacity_bytes) : capacity_(capacity_bytes / kWordBytes) {
  if (capacity_ == 0) throw ConfigError("temp store must hold at least one word");
}

std::optional<Word> TempStore::find(Addr a) const {
  auto it = map_.find(a);
  if (it != map_.end()) return it->second;
  if (evicted_.count(a)) ++lost_reads_;
  return std::nullopt;
}

void TempStore::write(Addr a, Word v) {
  auto it = map_.find(a);
  if (it != map_.end()) {
    it->second = v;
    return;
  }
  if (map_.size() == capacity_) {
    const Addr old = order_.front();
    order_.pop_front();
    map_.erase(old);
    evicted_[old] = true;
    ++evictions_;
  }
  map_.emplace(a, v);
  order_.push_back(a);
  evicted_.erase(a);
}

void TempStore::clear() {
  map_.clear();
  order_.clear();
  evicted_.clear();
}

RunaheadController::RunaheadController(MemorySystem& mem, std::uint32_t temp_store_bytes)
    : mem_(mem), temp_(temp_store_bytes) {}

void RunaheadController::enter(PEArray& array, Cycle now) {
  if (active_) throw SimulationError("nested runahead episode");
  if (!array.has_pending()) throw SimulationError("runahead entry without an outstanding load");
  cur_ = RunaheadEpisode{};
  cur_.trigger_tokens = array.pending_ids();
  cur_.entry_cycle = now;
  lost_base_ = temp_.lost_reads();
  array.save_state();
  array.poison_pending();
  mem_.l1().set_store_guard(true);
  active_ = true;
}

void RunaheadController::prefetch(const Route& rt, Addr addr, Cycle now) {
  if (mem_.l1().prefetch(rt.partition, addr, now).outcome == AccessOutcome::MissAllocated)
    ++cur_.prefetches;
}

TaggedWord RunaheadController::load(std::uint32_t row, TaggedWord addr, Cycle now) {
  if (addr.dummy) return TaggedWord::poison();
  const Route rt = mem_.route(row, addr.value);
  if (rt.kind == Route::Kind::Fault) return TaggedWord::poison();
  if (auto v = temp_.find(addr.value)) return TaggedWord::clean(*v);
  if (rt.kind == Route::Kind::Spm) return TaggedWord::clean(mem_.spm_read(rt.region, addr.value));
  const AccessResult r = mem_.l1().prefetch(rt.partition, addr.value, now);
  if (r.outcome == AccessOutcome::Hit) return TaggedWord::clean(r.data);
  if (r.outcome == AccessOutcome::MissAllocated) ++cur_.prefetches;
  return TaggedWord::poison();
}

void RunaheadController::store(std::uint32_t row, TaggedWord addr, TaggedWord data, Cycle now) {
  if (addr.dummy || data.dummy) return;
  const Route rt = mem_.route(row, addr.value);
  if (rt.kind == Route::Kind::Fault) return;
  temp_.write(addr.value, data.value);
  if (rt.kind == Route::Kind::Cache) prefetch(rt, addr.value, now);
}

void RunaheadController::hold(const Completion& c) { held_.push_back(c); }

bool RunaheadController::maybe_exit(PEArray& array, Cycle now) {
  if (!active_) return false;
  for (auto t : cur_.trigger_tokens) {
    bool got = false;
    for (const auto& c : held_) got = got || c.token == t;
    if (!got) return false;
  }
  array.restore_state();
  for (const auto& c : held_) array.deliver(c.token, TaggedWord::clean(c.value));
  held_.clear();
  cur_.exit_cycle = now;
  cur_.lost_reads = static_cast<std::uint32_t>(temp_.lost_reads() - lost_base_);
  temp_.clear();
  mem_.l1().set_store_guard(false);
  episodes_.push_back(cur_);
  active_ = false;
  return true;
}

PrefetchSummary classify_prefetches(const std::vector<PrefetchEvent>& log,
                                    std::uint64_t demand_misses) {
  enum class St { InFlight, Resident, Gone };
  std::map<std::pair<std::uint32_t, Addr>, St> live;
  PrefetchSummary s;
  for (const auto& e : log) {
    const auto key = std::make_pair(e.partition, e.block);
    auto it = live.find(key);
    switch (e.kind) {
      case PrefetchEvent::Kind::Issued:
        ++s.total;
        live[key] = St::InFlight;
        break;
      case PrefetchEvent::Kind::LateUse:
        if (it != live.end() && it->second == St::InFlight) {
          ++s.used;
          live.erase(it);
        }
        break;
      case PrefetchEvent::Kind::Installed:
        if (it != live.end()) it->second = St::Resident;
        break;
      case PrefetchEvent::Kind::DemandHit:
        if (it != live.end() && it->second == St::Resident) {
          ++s.used;
          live.erase(it);
        }
        break;
      case PrefetchEvent::Kind::Evicted:
        if (it != live.end() && it->second == St::Resident) it->second = St::Gone;
        break;
      case PrefetchEvent::Kind::DemandMiss:
        if (it != live.end() && it->second == St::Gone) {
          ++s.evicted;
          live.erase(it);
        }
        break;
    }
  }
  s.useless = s.total - s.used - s.evicted;
  s.demand_misses = demand_misses;
  s.accuracy = s.total == 0 ? 1.0 : 1.0 - static_cast<double>(s.useless) / static_cast<double>(s.total);
  const double denom = static_cast<double>(s.used + demand_misses);
  s.coverage = denom == 0 ? 0.0 : static_cast<double>(s.used) / denom;
  return s;
}

}  // namespace cgra

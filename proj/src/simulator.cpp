#include "cgra/simulator.hpp"

#include <algorithm>
#include <sstream>

namespace cgra {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::SpmOnly: return "spm-only";
    case Variant::Cache: return "cache";
    case Variant::Runahead: return "runahead";
    case Variant::Reconfig: return "reconfig";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "spm-only") return Variant::SpmOnly;
  if (s == "cache") return Variant::Cache;
  if (s == "runahead") return Variant::Runahead;
  if (s == "reconfig") return Variant::Reconfig;
  throw ConfigError("unknown variant '" + std::string(s) + "' (spm-only|cache|runahead|reconfig)");
}

class Simulator::Port : public MemoryPort {
 public:
  explicit Port(Simulator& s) : s_(s) {}

  LoadReply submit(const MemoryRequest& req) override {
    const bool is_load = req.kind == MemoryRequest::Kind::Load;
    if (s_.array_.mode() == Mode::Runahead) {
      if (is_load) return LoadReply::ready(s_.ra_.load(req.row, req.addr, s_.now_));
      s_.ra_.store(req.row, req.addr, req.data, s_.now_);
      return LoadReply::ready({});
    }
    if (!s_.deferring_) {
      LoadReply reply = LoadReply::ready({});
      if (s_.accept(req, &reply)) return reply;
      s_.deferring_ = true;
    }
    // Requests behind a refused one wait too, so program order is kept.
    s_.deferred_.push_back(req);
    return LoadReply::pending();
  }

 private:
  Simulator& s_;
};

Simulator::Simulator(const KernelProgram& program, const SimOptions& opts)
    : prog_(program),
      opts_(opts),
      mem_(opts.hw, program),
      array_(program),
      ra_(mem_, opts.hw.temp_store_bytes),
      port_(std::make_unique<Port>(*this)) {
  if (opts_.variant == Variant::Reconfig) {
    if (opts_.reconfig.window == 0) throw ConfigError("reconfiguration window must be positive");
    if (!(opts_.reconfig.threshold > 0.0 && opts_.reconfig.threshold < 1.0))
      throw ConfigError("reconfiguration threshold must lie in (0,1)");
  }
  if (opts_.record_trace) array_.set_trace([this](const TraceEvent& e) { trace_.push_back(e); });
}

Simulator::~Simulator() = default;

bool Simulator::accept(const MemoryRequest& req, LoadReply* reply) {
  if (array_.mode() != Mode::Normal) throw SimulationError("architectural access during runahead");
  const bool is_load = req.kind == MemoryRequest::Kind::Load;
  const Addr a = req.addr.value;
  const Route rt = mem_.route(req.row, a);
  if (rt.kind == Route::Kind::Fault) {
    std::ostringstream os;
    os << "memory fault: row " << req.row << " address 0x" << std::hex << a << " at cycle " << std::dec
       << now_;
    throw SimulationError(os.str());
  }
  if (rt.kind == Route::Kind::Spm) {
    ++spm_accesses_;
    if (is_load) *reply = LoadReply::ready(TaggedWord::clean(mem_.spm_read(rt.region, a)));
    else mem_.spm_write(rt.region, a, req.data.value);
    return true;
  }
  if (opts_.variant == Variant::SpmOnly) {
    ++dram_direct_;
    if (is_load) {
      dram_fills_.push_back({now_ + opts_.hw.l2.miss_latency, req.id, mem_.backing().read_word(a)});
      *reply = LoadReply::pending();
    } else {
      mem_.backing().write_word(a, req.data.value);  // posted write
    }
    return true;
  }
  CacheUnit& l1 = mem_.l1();
  AccessResult r = is_load ? l1.load(rt.partition, a, req.id, now_)
                           : l1.store(rt.partition, a, req.data.value, now_);
  if (r.outcome == AccessOutcome::MshrFull || r.outcome == AccessOutcome::StoreBufferFull) return false;
  if (is_load)
    *reply = r.outcome == AccessOutcome::Hit ? LoadReply::ready(TaggedWord::clean(r.data)) : LoadReply::pending();
  if (phase_ == Phase::Sampling) sample_.per_partition[rt.partition].push_back({now_, a, !is_load});
  return true;
}

void Simulator::retry_deferred() {
  std::size_t done = 0;
  for (; done < deferred_.size(); ++done) {
    const MemoryRequest& req = deferred_[done];
    LoadReply reply = LoadReply::ready({});
    if (!accept(req, &reply)) break;
    if (req.kind == MemoryRequest::Kind::Load && reply.status == LoadReply::Status::Ready)
      array_.deliver(req.id, reply.value);
  }
  deferred_.erase(deferred_.begin(), deferred_.begin() + static_cast<std::ptrdiff_t>(done));
}

std::uint64_t Simulator::total_demand_misses() const {
  std::uint64_t m = 0;
  for (std::uint32_t p = 0; p < mem_.l1().geometry().partitions; ++p) m += mem_.l1().stats(p).demand_misses;
  return m;
}

bool Simulator::reconfig_blocks_array() {
  if (opts_.variant != Variant::Reconfig) return false;
  if (now_ < penalty_until_) return true;
  if (phase_ != Phase::Apply) return false;
  if (array_.done()) {
    pending_plan_.reset();
    phase_ = Phase::Monitor;
    return false;
  }
  // Hold the array until outstanding misses drain, then switch layouts.
  if (deferred_.empty() && !array_.has_pending() && mem_.l1().quiescent()) {
    ReconfigRecord rec = std::move(*pending_plan_);
    pending_plan_.reset();
    rec.dirty_lines = mem_.l1().apply_plan(rec.plan.ways, rec.plan.lines);
    rec.penalty = opts_.reconfig.control_overhead + rec.dirty_lines;
    rec.cycle = now_;
    penalty_until_ = now_ + rec.penalty;
    penalty_cycles_ += rec.penalty;
    reconfigs_.push_back(std::move(rec));
    phase_ = Phase::Monitor;
    phase_start_ = penalty_until_;
    misses_at_start_ = total_demand_misses();
  }
  return true;
}

void Simulator::reconfig_bookkeeping() {
  if (opts_.variant != Variant::Reconfig || array_.done()) return;
  const Cycle elapsed_to = now_ + 1;
  const Cycle W = opts_.reconfig.window;
  if (phase_ == Phase::Monitor) {
    if (elapsed_to < phase_start_ || elapsed_to - phase_start_ < W) return;
    const std::uint64_t misses = total_demand_misses() - misses_at_start_;
    if (monitor_tick(misses, W, opts_.reconfig.threshold) == MonitorSignal::TriggerSampling) {
      phase_ = Phase::Sampling;
      sample_ = SampleWindow{};
      sample_.start = elapsed_to;
      sample_.length = W;
      sample_.per_partition.assign(mem_.l1().geometry().partitions, {});
    }
    phase_start_ = elapsed_to;
    misses_at_start_ = total_demand_misses();
  } else if (phase_ == Phase::Sampling) {
    if (elapsed_to - phase_start_ < W) return;
    const CacheUnit& l1 = mem_.l1();
    ModelGeometry g{l1.geometry().phys_sets, l1.geometry().max_line};
    std::vector<std::uint32_t> lines;
    for (auto L : kLineSizes)
      if (l1.valid_line(L)) lines.push_back(L);
    PlanDetail d = build_plan(sample_, g, l1.geometry().total_ways, lines);
    ReconfigPlan current{l1.way_counts(), l1.line_sizes(), 0.0};
    current.objective = plan_objective(sample_, g, current.ways, current.lines);
    if (d.plan.objective > current.objective && !(d.plan == current)) {
      ReconfigRecord rec;
      rec.previous = current;
      rec.plan = d.plan;
      rec.current_objective = current.objective;
      rec.window = std::move(sample_);
      pending_plan_ = std::move(rec);
      phase_ = Phase::Apply;
    } else {
      phase_ = Phase::Monitor;
    }
    sample_ = SampleWindow{};
    phase_start_ = elapsed_to;
    misses_at_start_ = total_demand_misses();
  }
}

bool Simulator::finished() const {
  return array_.done() && !array_.has_pending() && deferred_.empty() && !ra_.active() &&
         mem_.l1().quiescent() && dram_fills_.empty();
}

void Simulator::tick() {
  if (now_ >= opts_.cycle_cap) throw CycleCapExceeded(opts_.cycle_cap);
  deferring_ = false;

  std::vector<Completion> done = mem_.l1().fill(now_);
  if (!dram_fills_.empty()) {
    auto split = std::stable_partition(dram_fills_.begin(), dram_fills_.end(),
                                       [&](const DramFill& f) { return f.ready > now_; });
    for (auto it = split; it != dram_fills_.end(); ++it) done.push_back({it->token, it->value, 0});
    dram_fills_.erase(split, dram_fills_.end());
  }
  for (const auto& c : done) {
    if (ra_.active()) ra_.hold(c);
    else array_.deliver(c.token, TaggedWord::clean(c.value));
  }
  if (ra_.active()) ra_.maybe_exit(array_, now_);

  bool stall = false;
  if (!deferred_.empty()) {
    retry_deferred();
    stall = true;
  }
  if (reconfig_blocks_array()) stall = true;

  if (!stall) {
    if (ra_.active()) {
      array_.step(now_, *port_);
      ra_.count_cycle();
    } else if (array_.has_pending()) {
      if (opts_.variant == Variant::Runahead && !array_.done()) {
        ra_.enter(array_, now_);
        array_.step(now_, *port_);
        ra_.count_cycle();
      }
    } else if (!array_.done()) {
      array_.step(now_, *port_);
      ++active_;
    }
  }

  mem_.l1().issue(now_);
  reconfig_bookkeeping();
  ++now_;
}

SimResult Simulator::run() {
  while (!finished()) tick();

  SimResult res;
  RunStats& s = res.stats;
  s.kernel = prog_.name;
  s.variant = std::string(variant_name(opts_.variant));
  s.total_cycles = now_;
  s.active_cycles = active_;
  s.stall_cycles = now_ - active_;
  s.runahead_cycles = ra_.runahead_cycles();
  s.spm_accesses = spm_accesses_;
  const CacheUnit& l1 = mem_.l1();
  std::uint64_t demand = 0;
  for (std::uint32_t p = 0; p < l1.geometry().partitions; ++p) {
    const CacheStats& cs = l1.stats(p);
    s.l1_accesses += cs.accesses;
    demand += cs.demand_misses;
    s.l1_mshr_allocs += cs.mshr_allocs;
    s.l1_writebacks += cs.writebacks;
  }
  s.l1_demand_misses = demand;
  s.l2_accesses = mem_.l2().stats().reads;
  s.l2_misses = mem_.l2().stats().read_misses;
  s.dram_accesses = opts_.variant == Variant::SpmOnly ? dram_direct_ : s.l2_misses;
  s.runahead_episodes = ra_.episodes().size();
  res.prefetch = classify_prefetches(l1.prefetch_log(), demand);
  s.prefetches = res.prefetch.total;
  s.pf_used = res.prefetch.used;
  s.pf_evicted = res.prefetch.evicted;
  s.pf_useless = res.prefetch.useless;
  s.coverage = res.prefetch.coverage;
  s.accuracy = res.prefetch.accuracy;
  s.reconfigurations = reconfigs_.size();
  s.reconfig_penalty_cycles = penalty_cycles_;
  s.partial_line_observations = l1.partial_observations();
  s.kernel_digest = kernel_digest(prog_);
  res.image = mem_.final_image();
  s.image_digest = image_digest(res.image);
  res.trace = std::move(trace_);
  res.episodes = ra_.episodes();
  res.reconfigs = reconfigs_;
  return res;
}

SimResult simulate(const KernelProgram& program, const SimOptions& opts) {
  Simulator sim(program, opts);
  return sim.run();
}

}  // namespace cgra

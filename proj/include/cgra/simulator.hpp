#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgra/hierarchy.hpp"
#include "cgra/kernel.hpp"
#include "cgra/metrics.hpp"
#include "cgra/pe_array.hpp"
#include "cgra/reconfig.hpp"
#include "cgra/runahead.hpp"

namespace cgra {

enum class Variant : std::uint8_t { SpmOnly, Cache, Runahead, Reconfig };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);

struct ReconfigSettings {
  Cycle window = 4096;
  double threshold = 0.05;
  std::uint32_t control_overhead = 64;
};

struct SimOptions {
  Variant variant = Variant::Cache;
  HierarchyConfig hw = preset_config("base");
  ReconfigSettings reconfig;
  Cycle cycle_cap = 100'000'000;
  bool record_trace = false;
};

struct ReconfigRecord {
  Cycle cycle = 0;            // when the new layout took effect
  ReconfigPlan previous;
  ReconfigPlan plan;
  double current_objective = 0.0;
  SampleWindow window;
  std::uint64_t dirty_lines = 0;
  std::uint64_t penalty = 0;
};

struct SimResult {
  RunStats stats;
  MemoryImage image;
  std::vector<TraceEvent> trace;
  std::vector<RunaheadEpisode> episodes;
  std::vector<ReconfigRecord> reconfigs;
  PrefetchSummary prefetch;
};

// One cycle-level simulation of a kernel on a memory-system variant.
class Simulator {
 public:
  Simulator(const KernelProgram& program, const SimOptions& opts);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  bool finished() const;
  // Advances one clock cycle.
  void tick();
  // Runs to completion (or the cycle cap) and collects results.
  SimResult run();

  Cycle cycle() const { return now_; }
  const PEArray& array() const { return array_; }
  MemorySystem& memory() { return mem_; }
  const RunaheadController& runahead() const { return ra_; }
  std::uint64_t active_cycles() const { return active_; }

 private:
  class Port;
  enum class Phase : std::uint8_t { Monitor, Sampling, Apply };

  bool accept(const MemoryRequest& req, LoadReply* reply);
  void retry_deferred();
  void reconfig_bookkeeping();
  bool reconfig_blocks_array();
  std::uint64_t total_demand_misses() const;

  const KernelProgram& prog_;
  SimOptions opts_;
  MemorySystem mem_;
  PEArray array_;
  RunaheadController ra_;
  std::unique_ptr<Port> port_;
  Cycle now_ = 0;
  std::uint64_t active_ = 0;
  std::uint64_t spm_accesses_ = 0;
  std::uint64_t dram_direct_ = 0;

  bool deferring_ = false;  // a request earlier in this cycle was refused
  std::vector<MemoryRequest> deferred_;

  struct DramFill {
    Cycle ready;
    std::uint64_t token;
    Word value;
  };
  std::vector<DramFill> dram_fills_;

  Phase phase_ = Phase::Monitor;
  Cycle phase_start_ = 0;
  std::uint64_t misses_at_start_ = 0;
  SampleWindow sample_;
  std::optional<ReconfigRecord> pending_plan_;
  Cycle penalty_until_ = 0;
  std::uint64_t penalty_cycles_ = 0;
  std::vector<ReconfigRecord> reconfigs_;

  std::vector<TraceEvent> trace_;
};

SimResult simulate(const KernelProgram& program, const SimOptions& opts);

}  // namespace cgra

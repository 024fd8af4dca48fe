#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cgra/types.hpp"

namespace cgra {

inline constexpr double kRateFloor = 1e-9;

double time_miss_rate(std::uint64_t misses, Cycle window);

enum class MonitorSignal : std::uint8_t { Quiet, TriggerSampling };
// Strictly-above-threshold trigger; threshold must lie in (0, 1).
MonitorSignal monitor_tick(std::uint64_t misses, Cycle window, double threshold);

struct SampledAccess {
  Cycle cycle = 0;
  Addr addr = 0;
  bool is_write = false;
};

struct SampleWindow {
  Cycle start = 0;
  Cycle length = 0;
  std::vector<std::vector<SampledAccess>> per_partition;
};

// Geometry fed to the standalone model: the physical set count of the way
// pool and the largest legal line.
struct ModelGeometry {
  std::uint32_t phys_sets = 64;
  std::uint32_t max_line = 128;
};

// Misses of one partition's sampled stream on a cold k-way LRU cache with
// virtual line `line`. k = 0 means every access misses.
std::uint64_t model_misses(const std::vector<SampledAccess>& accesses, const ModelGeometry& g,
                           std::uint32_t ways, std::uint32_t line);
double model_hit_rate(const SampleWindow& w, std::size_t partition, const ModelGeometry& g,
                      std::uint32_t ways, std::uint32_t line);

using ProfitMatrix = std::vector<std::vector<double>>;  // n x (T_max + 1)

struct Allocation {
  double objective = 0.0;
  std::vector<std::uint32_t> ways;
};

Allocation max_profit(const ProfitMatrix& H, std::uint32_t t_max);
Allocation brute_force_alloc(const ProfitMatrix& H, std::uint32_t t_max);

struct ReconfigPlan {
  std::vector<std::uint32_t> ways;
  std::vector<std::uint32_t> lines;
  double objective = 0.0;
  friend bool operator==(const ReconfigPlan& a, const ReconfigPlan& b) {
    return a.ways == b.ways && a.lines == b.lines;
  }
};

struct PlanDetail {
  ReconfigPlan plan;
  ProfitMatrix profit;                          // log of best rate per (i, k)
  std::vector<std::vector<std::uint32_t>> best_line;  // argmax line per (i, k)
};

// Profiles every (partition, ways, line) point and solves the allocation.
PlanDetail build_plan(const SampleWindow& w, const ModelGeometry& g, std::uint32_t total_ways,
                      const std::vector<std::uint32_t>& line_choices);

// Objective the model assigns to a given configuration.
double plan_objective(const SampleWindow& w, const ModelGeometry& g,
                      const std::vector<std::uint32_t>& ways, const std::vector<std::uint32_t>& lines);

std::string emit_plan(const ReconfigPlan& p);
ReconfigPlan parse_plan(std::string_view text);

}  // namespace cgra

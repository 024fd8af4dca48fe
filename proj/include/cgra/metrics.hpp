#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgra/types.hpp"

namespace cgra {

struct RunStats {
  std::string run_id;
  std::string kernel;
  std::string variant;
  std::uint64_t seed = 0;

  std::uint64_t total_cycles = 0;
  std::uint64_t active_cycles = 0;
  std::uint64_t stall_cycles = 0;     // includes runahead, reconfiguration and drain
  std::uint64_t runahead_cycles = 0;

  std::uint64_t spm_accesses = 0;
  std::uint64_t l1_accesses = 0;
  std::uint64_t l1_demand_misses = 0;
  std::uint64_t l1_mshr_allocs = 0;   // demand + prefetch block requests
  std::uint64_t l2_accesses = 0;
  std::uint64_t l2_misses = 0;
  std::uint64_t dram_accesses = 0;
  std::uint64_t l1_writebacks = 0;

  std::uint64_t runahead_episodes = 0;
  std::uint64_t prefetches = 0;
  std::uint64_t pf_used = 0;
  std::uint64_t pf_evicted = 0;
  std::uint64_t pf_useless = 0;
  double coverage = 0.0;
  double accuracy = 1.0;

  std::uint64_t reconfigurations = 0;
  std::uint64_t reconfig_penalty_cycles = 0;
  std::uint64_t partial_line_observations = 0;

  std::uint64_t kernel_digest = 0;
  std::uint64_t image_digest = 0;

  double utilization() const;
};

// baseline.total_cycles / candidate.total_cycles; both runs must use the
// same kernel and data.
double speedup(const RunStats& baseline, const RunStats& candidate);

// Column order of every run CSV.
const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string csv_row(const RunStats& s);
std::string format_csv(const std::vector<RunStats>& runs);
void emit_csv(const std::vector<RunStats>& runs, const std::string& path);
// Appends rows, writing the header first when the file is new or empty.
void append_csv(const std::vector<RunStats>& runs, const std::string& path);

std::string format_fixed(double v, int digits = 6);

}  // namespace cgra

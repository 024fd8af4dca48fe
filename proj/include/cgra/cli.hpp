#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cgra/kernel_gen.hpp"
#include "cgra/simulator.hpp"

namespace cgra {

// Everything needed to reproduce one run.
struct RunSpec {
  std::string kernel_file;          // takes precedence over `builtin`
  std::string builtin = "gather";
  BuiltinParams params;
  std::string preset = "base";
  std::string config_file;          // key=value overrides applied after the preset
  std::vector<std::pair<std::string, std::string>> overrides;  // applied last
  Variant variant = Variant::Cache;
  std::uint64_t seed = 1;
  Cycle cycle_cap = 100'000'000;
  ReconfigSettings reconfig;
};

KernelProgram resolve_kernel(const RunSpec& spec);
SimOptions resolve_options(const RunSpec& spec);
// Runs the spec and labels the returned stats.
RunStats execute(const RunSpec& spec, const std::string& run_id = {});
// Command line that regenerates the run, plus the resolved hardware.
std::string repro_line(const RunSpec& spec);

// Sweep parameter name -> hardware setting key. Throws ConfigError.
std::string sweep_key(const std::string& param);
std::vector<RunStats> sweep(const RunSpec& base, const std::string& param,
                            const std::vector<std::uint32_t>& values);

struct CompareRow {
  std::string kernel;
  std::string variant;
  std::uint64_t cycles = 0;
  std::string speedup_vs_spm_only;  // empty when the baseline failed
  std::string speedup_vs_cache;
  std::string status;
};

// Kernel-set entries: a kernel file path, a builtin name, or
// "pattern:<kind>". Every entry runs under all four variants.
std::vector<CompareRow> compare(const RunSpec& base, const std::vector<std::string>& kernels);
std::string format_compare(const std::vector<CompareRow>& rows);

// Default directory for CSV output ($CGRASIM_OUT_DIR or ".").
std::string default_out_dir();

int cli_main(int argc, char** argv);

}  // namespace cgra

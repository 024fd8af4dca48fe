#include "cgra/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cgra {

double RunStats::utilization() const {
  return total_cycles == 0 ? 0.0 : static_cast<double>(active_cycles) / static_cast<double>(total_cycles);
}

double speedup(const RunStats& baseline, const RunStats& candidate) {
  if (baseline.kernel_digest != candidate.kernel_digest)
    throw ValidationError("speedup between runs of different kernels");
  if (candidate.total_cycles == 0) throw ValidationError("candidate run has zero cycles");
  return static_cast<double>(baseline.total_cycles) / static_cast<double>(candidate.total_cycles);
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "run_id", "kernel",  "variant",     "cycles",    "utilization", "spm_acc",    "l1_acc",   "l1_miss",
      "l2_acc", "dram_acc", "ra_episodes", "pf_used", "pf_evicted",  "pf_useless", "coverage"};
  return cols;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_header() {
  std::string h;
  for (const auto& c : csv_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

std::string csv_row(const RunStats& s) {
  std::ostringstream os;
  os << s.run_id << ',' << s.kernel << ',' << s.variant << ',' << s.total_cycles << ','
     << format_fixed(s.utilization()) << ',' << s.spm_accesses << ',' << s.l1_accesses << ','
     << s.l1_demand_misses << ',' << s.l2_accesses << ',' << s.dram_accesses << ','
     << s.runahead_episodes << ',' << s.pf_used << ',' << s.pf_evicted << ',' << s.pf_useless << ','
     << format_fixed(s.coverage);
  return os.str();
}

std::string format_csv(const std::vector<RunStats>& runs) {
  std::string out = csv_header() + "\n";
  for (const auto& r : runs) out += csv_row(r) + "\n";
  return out;
}

void emit_csv(const std::vector<RunStats>& runs, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f << format_csv(runs);
  if (!f) throw Error("write failed for " + path);
}

void append_csv(const std::vector<RunStats>& runs, const std::string& path) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream f(path, std::ios::binary | std::ios::app);
  if (!f) throw Error("cannot write " + path);
  if (fresh) f << csv_header() << '\n';
  for (const auto& r : runs) f << csv_row(r) << '\n';
  if (!f) throw Error("write failed for " + path);
}

}  // namespace cgra

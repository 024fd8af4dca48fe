#include "cgra/reconfig.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cgra {

double time_miss_rate(std::uint64_t misses, Cycle window) {
  if (window == 0) throw ValidationError("time miss rate over an empty window");
  return static_cast<double>(misses) / static_cast<double>(window);
}

MonitorSignal monitor_tick(std::uint64_t misses, Cycle window, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("monitor threshold must lie in (0,1)");
  return time_miss_rate(misses, window) > threshold ? MonitorSignal::TriggerSampling : MonitorSignal::Quiet;
}

std::uint64_t model_misses(const std::vector<SampledAccess>& accesses, const ModelGeometry& g,
                           std::uint32_t ways, std::uint32_t line) {
  if (ways == 0) return accesses.size();
  if (!is_pow2(line) || line < 16 || line > g.max_line || line / 16 > g.phys_sets)
    throw ValidationError("model line size " + std::to_string(line) + " not supported");
  const std::uint32_t vsets = g.phys_sets / (line / 16);
  // Recency lists, most recent at the back.
  std::vector<std::vector<Addr>> sets(vsets);
  std::uint64_t misses = 0;
  for (const auto& a : accesses) {
    const Addr vline = a.addr / line;
    auto& s = sets[vline % vsets];
    auto it = std::find(s.begin(), s.end(), vline);
    if (it != s.end()) {
      s.erase(it);
    } else {
      ++misses;
      if (s.size() == ways) s.erase(s.begin());
    }
    s.push_back(vline);
  }
  return misses;
}

double model_hit_rate(const SampleWindow& w, std::size_t partition, const ModelGeometry& g,
                      std::uint32_t ways, std::uint32_t line) {
  const auto misses = model_misses(w.per_partition.at(partition), g, ways, line);
  return 1.0 - time_miss_rate(misses, w.length);
}

Allocation max_profit(const ProfitMatrix& H, std::uint32_t t_max) {
  const std::size_t n = H.size();
  for (const auto& row : H)
    if (row.size() != std::size_t{t_max} + 1) throw ValidationError("profit matrix width must be T_max + 1");
  std::vector<std::vector<double>> dp(n + 1, std::vector<double>(t_max + 1, 0.0));
  for (std::size_t i = 1; i <= n; ++i) {
    double base = 0.0;
    for (std::size_t k = 0; k < i; ++k) base += H[k][0];
    dp[i][0] = base;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::uint32_t j = 1; j <= t_max; ++j) {
      dp[i][j] = dp[i - 1][j] + H[i - 1][0];
      for (std::uint32_t k = 1; k <= j; ++k) {
        const double cand = dp[i - 1][j - k] + H[i - 1][k];
        if (cand > dp[i][j]) dp[i][j] = cand;
      }
    }
  }
  Allocation out;
  out.ways.assign(n, 0);
  std::uint32_t j = t_max;
  for (std::size_t i = n; i >= 1; --i) {
    for (std::uint32_t k = 0; k <= j; ++k) {
      if (dp[i][j] == dp[i - 1][j - k] + H[i - 1][k]) {
        out.ways[i - 1] = k;
        j -= k;
        break;
      }
    }
  }
  out.objective = dp[n][t_max];
  return out;
}

Allocation brute_force_alloc(const ProfitMatrix& H, std::uint32_t t_max) {
  const std::size_t n = H.size();
  if (n > 6 || t_max > 12) throw ValidationError("brute force limited to n <= 6, T_max <= 12");
  for (const auto& row : H)
    if (row.size() != std::size_t{t_max} + 1) throw ValidationError("profit matrix width must be T_max + 1");
  Allocation best;
  best.objective = -HUGE_VAL;
  std::vector<std::uint32_t> cur(n, 0);
  auto rec = [&](auto&& self, std::size_t i, std::uint32_t left) -> void {
    if (i == n) {
      double s = 0.0;
      for (std::size_t q = 0; q < n; ++q) s += H[q][cur[q]];
      if (best.ways.empty() || s > best.objective) {
        best.objective = s;
        best.ways = cur;
      }
      return;
    }
    for (std::uint32_t k = 0; k <= left; ++k) {
      cur[i] = k;
      self(self, i + 1, left - k);
    }
  };
  rec(rec, 0, t_max);
  if (n == 0) best.objective = 0.0;
  return best;
}

PlanDetail build_plan(const SampleWindow& w, const ModelGeometry& g, std::uint32_t total_ways,
                      const std::vector<std::uint32_t>& line_choices) {
  if (line_choices.empty()) throw ValidationError("no line sizes to choose from");
  const std::size_t n = w.per_partition.size();
  PlanDetail d;
  d.profit.assign(n, std::vector<double>(total_ways + 1, 0.0));
  d.best_line.assign(n, std::vector<std::uint32_t>(total_ways + 1, line_choices.front()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t k = 0; k <= total_ways; ++k) {
      double best = -HUGE_VAL;
      for (auto L : line_choices) {
        const double r = model_hit_rate(w, i, g, k, L);
        if (r > best) {
          best = r;
          d.best_line[i][k] = L;
        }
        if (k == 0) break;  // no ways, no line
      }
      d.profit[i][k] = std::log(std::max(best, kRateFloor));
    }
  }
  const Allocation a = max_profit(d.profit, total_ways);
  d.plan.ways = a.ways;
  d.plan.objective = a.objective;
  for (std::size_t i = 0; i < n; ++i) d.plan.lines.push_back(d.best_line[i][a.ways[i]]);
  return d;
}

double plan_objective(const SampleWindow& w, const ModelGeometry& g,
                      const std::vector<std::uint32_t>& ways, const std::vector<std::uint32_t>& lines) {
  double s = 0.0;
  for (std::size_t i = 0; i < ways.size(); ++i)
    s += std::log(std::max(model_hit_rate(w, i, g, ways[i], lines[i]), kRateFloor));
  return s;
}

std::string emit_plan(const ReconfigPlan& p) {
  std::ostringstream os;
  for (std::size_t i = 0; i < p.ways.size(); ++i)
    os << "partition " << i << " ways " << p.ways[i] << " line " << p.lines[i] << '\n';
  return os.str();
}

ReconfigPlan parse_plan(std::string_view text) {
  ReconfigPlan p;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string w0, w1, w2;
    long long idx = 0, ways = 0, lsize = 0;
    if (!(ls >> w0)) continue;
    if (w0 != "partition" || !(ls >> idx >> w1 >> ways >> w2 >> lsize) || w1 != "ways" || w2 != "line")
      throw ParseError(lineno, "expected 'partition I ways S line L'");
    std::string rest;
    if (ls >> rest) throw ParseError(lineno, "trailing text in plan line");
    if (idx != static_cast<long long>(p.ways.size())) throw ParseError(lineno, "partitions must be listed in order");
    if (ways < 0 || lsize <= 0) throw ParseError(lineno, "negative way count or line size");
    p.ways.push_back(static_cast<std::uint32_t>(ways));
    p.lines.push_back(static_cast<std::uint32_t>(lsize));
  }
  return p;
}

}  // namespace cgra

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cgra/cli.hpp"
#include "cgra/metrics.hpp"
#include "../oracles/scalar.hpp"
#include "helpers.hpp"

#ifndef CGRASIM_TEST_DATA
#define CGRASIM_TEST_DATA "tests/data"
#endif

using namespace cgra;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / "cgrasim_unit";
  fs::create_directories(d);
  auto p = d / name;
  fs::remove(p);
  return p;
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "cgrasim");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

RunSpec small_gather() {
  RunSpec s;
  s.builtin = "gather";
  s.params.edges = 400;
  s.params.nodes = 128;
  return s;
}

}  // namespace

TEST_CASE("speedup") {
  RunStats a, b;
  a.total_cycles = 3000;
  b.total_cycles = 1000;
  CHECK(speedup(a, a) == 1.0);
  CHECK(speedup(a, b) == doctest::Approx(3.0));
  b.kernel_digest = 1;
  CHECK_THROWS_AS(speedup(a, b), ValidationError);
}

TEST_CASE("cache beats spm-only on gather at the base preset") {
  auto k = gen_gather_kernel(2000, 256, 1);
  auto spm = testutil::run(k, Variant::SpmOnly);
  auto cache = testutil::run(k, Variant::Cache);
  CHECK(speedup(spm.stats, cache.stats) > 1.0);
  for (const auto* r : {&spm, &cache}) {
    CHECK(r->stats.active_cycles + r->stats.stall_cycles == r->stats.total_cycles);
    CHECK(r->stats.utilization() >= 0.0);
    CHECK(r->stats.utilization() <= 1.0);
  }
}

TEST_CASE("csv layout") {
  CHECK(csv_header() ==
        "run_id,kernel,variant,cycles,utilization,spm_acc,l1_acc,l1_miss,l2_acc,dram_acc,ra_episodes,pf_used,"
        "pf_evicted,pf_useless,coverage");
  auto p = scratch("empty.csv");
  emit_csv({}, p.string());
  CHECK(slurp(p) == csv_header() + "\n");
  RunStats s;
  s.run_id = "r";
  s.kernel = "k";
  s.variant = "cache";
  s.total_cycles = 10;
  s.active_cycles = 4;
  emit_csv({s, s}, p.string());
  CHECK(slurp(p) == csv_header() + "\n" + csv_row(s) + "\n" + csv_row(s) + "\n");
  CHECK(csv_row(s) == "r,k,cache,10,0.400000,0,0,0,0,0,0,0,0,0,0.000000");
  append_csv({s}, p.string());
  CHECK(slurp(p) == csv_header() + "\n" + csv_row(s) + "\n" + csv_row(s) + "\n" + csv_row(s) + "\n");
  CHECK_THROWS(emit_csv({}, "/nonexistent-dir/x.csv"));
}

TEST_CASE("execute labels runs and is reproducible") {
  auto s = small_gather();
  s.variant = Variant::Runahead;
  s.seed = 9;
  auto a = execute(s);
  auto b = execute(s);
  CHECK(a.run_id == "gather-runahead-s9");
  CHECK(a.kernel == "gather");
  CHECK(a.variant == "runahead");
  CHECK(csv_row(a) == csv_row(b));
  const auto line = repro_line(s);
  CHECK(line.find("--builtin gather --edges 400 --nodes 128") != std::string::npos);
  CHECK(line.find("--seed 9") != std::string::npos);
  CHECK(line.find("hw: preset=base") != std::string::npos);
}

TEST_CASE("overrides flow into the hardware") {
  auto s = small_gather();
  s.overrides = {{"l1_ways", "8"}, {"mshr", "2"}};
  auto o = resolve_options(s);
  CHECK(o.hw.l1_ways == 8);
  CHECK(o.hw.mshr == 2);
  s.overrides = {{"l1_line", "24"}};
  CHECK_THROWS(resolve_options(s));
}

TEST_CASE("sweep") {
  CHECK(sweep_key("assoc") == "l1_ways");
  CHECK(sweep_key("spm") == "spm_bytes");
  CHECK_THROWS_AS(sweep_key("voltage"), ConfigError);
  auto s = small_gather();
  auto rows = sweep(s, "mshr", {1, 4});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].run_id == "gather-cache-s1-mshr=1");
  CHECK(rows[0].total_cycles >= rows[1].total_cycles);
  CHECK_THROWS_AS(sweep(s, "line", {64, 48}), ConfigError);
}

TEST_CASE("compare") {
  auto s = small_gather();
  s.params.length = 256;
  s.params.footprint = 4096;
  CHECK(format_compare(compare(s, {})) == "kernel,variant,cycles,speedup_vs_spm_only,speedup_vs_cache,status\n");
  auto rows = compare(s, {"gather", "pattern:linear", "pattern:random-uniform"});
  REQUIRE(rows.size() == 12);
  for (const auto& r : rows) {
    CAPTURE(r.kernel);
    CHECK(r.status == "ok");
  }
  CHECK(rows[0].speedup_vs_spm_only == "1.0000");
  CHECK(rows[1].speedup_vs_cache == "1.0000");
  CHECK(format_compare(rows) == format_compare(compare(s, {"gather", "pattern:linear", "pattern:random-uniform"})));
}

TEST_CASE("compare flags failed members") {
  auto s = small_gather();
  s.cycle_cap = 50;
  auto rows = compare(s, {"gather"});
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].status.rfind("failed", 0) == 0);
  CHECK(rows[1].status.find(',') == std::string::npos);
}

TEST_CASE("command line: run appends rows, default directory from the environment") {
  auto dir = fs::temp_directory_path() / "cgrasim_unit" / "outdir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  setenv("CGRASIM_OUT_DIR", dir.c_str(), 1);
  CHECK(invoke({"run", "--builtin", "gather", "--edges", "200", "--nodes", "64", "--variant", "cache"}) == 0);
  CHECK(invoke({"run", "--builtin", "gather", "--edges", "200", "--nodes", "64", "--variant", "runahead"}) == 0);
  unsetenv("CGRASIM_OUT_DIR");
  auto text = slurp(dir / "runs.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("gather-runahead-s1") != std::string::npos);
}

TEST_CASE("command line: errors set the exit status") {
  auto out = scratch("err.csv").string();
  CHECK(invoke({"run", "--builtin", "nope"}) != 0);
  CHECK(invoke({"run", "--builtin", "gather", "--edges", "100", "--cycles-max", "10", "--out", out}) == 1);
  CHECK(invoke({"run", "--builtin", "gather", "--l1-line", "48", "--out", out}) == 2);
  CHECK(invoke({"sweep", "--builtin", "gather", "--param", "mshr", "--values", "0", "--out", out}) == 2);
}

TEST_CASE("kernel files and edge lists from disk") {
  RunSpec s;
  s.kernel_file = CGRASIM_TEST_DATA "/scale.kern";
  auto k = resolve_kernel(s);
  SimOptions o;
  auto res = simulate(k, o);
  const auto& dst = res.image[1];
  CHECK(dst[0] == 16);
  CHECK(dst[1] == 22);
  CHECK(dst[2] == 0xFFFFFFFEu);
  CHECK(dst[15] == 301);
  CHECK(dst[5] == 1);
  CHECK(execute(s).kernel == "scale");

  RunSpec g;
  g.builtin = "gather";
  g.params.edge_list = CGRASIM_TEST_DATA "/tiny.edges";
  g.params.nodes = 1;
  auto gk = resolve_kernel(g);
  CHECK(gk.trip_count == 5);
  CHECK(gk.find_region("feature")->words == 4);  // node count grows to cover the list
  CHECK(simulate(gk, o).image == oracle::gather(gk));
}

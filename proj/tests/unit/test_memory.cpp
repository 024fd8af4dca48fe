#include <doctest.h>

#include <cstring>
#include <random>

#include "../oracles/ref_lru.hpp"
#include "cgra/cache_unit.hpp"
#include "cgra/hierarchy.hpp"
#include "cgra/kernel_gen.hpp"
#include "cgra/simulator.hpp"
#include "helpers.hpp"

using namespace cgra;

namespace {

// A cache unit over a fresh L2 and backing store.
struct Rig {
  BackingStore backing;
  L2Cache l2;
  CacheUnit l1;
  Rig(CacheGeometry g, std::vector<std::uint32_t> ways, std::vector<std::uint32_t> lines,
      L2Geometry l2g = {})
      : l2(l2g, backing), l1(g, l2) {
    l1.configure(ways, lines);
  }
  // Issues and fills until `part` has nothing outstanding.
  std::vector<Completion> drain(Cycle& now) {
    std::vector<Completion> out;
    for (int guard = 0; guard < 10000 && !l1.quiescent(); ++guard, ++now) {
      auto c = l1.fill(now);
      out.insert(out.end(), c.begin(), c.end());
      l1.issue(now);
    }
    return out;
  }
};

CacheGeometry geom(std::uint32_t sets, std::uint32_t ways, std::uint32_t parts = 1, std::uint32_t mshr = 16) {
  CacheGeometry g;
  g.phys_sets = sets;
  g.total_ways = ways;
  g.partitions = parts;
  g.mshr_entries = mshr;
  g.max_line = 128;
  return g;
}

L2Geometry l2_128() {
  L2Geometry g;
  g.line = 128;
  return g;
}

}  // namespace

TEST_CASE("presets match the hardware table") {
  auto b = preset_config("base");
  CHECK(b.grid_rows == 4);
  CHECK(b.num_vspm == 2);
  CHECK(b.spm_bytes == 512);
  CHECK(b.l1_count == 1);
  CHECK(b.l1_size == 4096);
  CHECK(b.l1_line == 32);
  CHECK(b.l1_ways == 4);
  CHECK(b.mshr == 16);
  CHECK(b.l2.size == 128 * 1024);
  CHECK(b.l2.ways == 8);
  CHECK(b.l2.hit_latency == 8);
  CHECK(b.l2.miss_latency == 80);
  auto r = preset_config("runahead");
  CHECK(r.l1_line == 64);
  auto c = preset_config("reconfig");
  CHECK(c.grid_rows == 8);
  CHECK(c.num_vspm == 4);
  CHECK(c.spm_bytes == 2048);
  CHECK(c.l1_count == 4);
  CHECK(c.l1_line == 64);
  CHECK(c.l1_ways == 8);
  CHECK(c.l2.line == 128);
  CHECK_THROWS_AS(preset_config("turbo"), ConfigError);
}

TEST_CASE("config text and overrides") {
  auto c = parse_config("# comment\npreset=runahead\nl1-ways = 8\nmshr=4\n");
  CHECK(c.preset == "runahead");
  CHECK(c.l1_ways == 8);
  CHECK(c.mshr == 4);
  apply_setting(c, "l1_line", "128");
  CHECK(c.l2.line == 128);
  try {
    parse_config("preset=base\nbogus=1\n");
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  auto bad = preset_config("base");
  bad.l1_ways = 3;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("routing: SPM, cache partition, foreign partition, unmapped") {
  KernelProgram k;
  k.grid_rows = 8;
  k.grid_cols = 8;
  k.regions.push_back({"s", 0x1000, 16, true, 0, std::vector<Word>(16)});
  k.regions.push_back({"c", 0x2000, 1024, false, 2, std::vector<Word>(1024)});
  MemorySystem mem(preset_config("reconfig"), k);
  auto r = mem.route(0, 0x1004);
  CHECK(r.kind == Route::Kind::Spm);
  r = mem.route(4, 0x2010);
  CHECK(r.kind == Route::Kind::Cache);
  CHECK(r.partition == 2);
  CHECK(mem.route(0, 0x2010).kind == Route::Kind::Fault);
  CHECK(mem.route(4, 0x9000).kind == Route::Kind::Fault);
  CHECK(mem.route(4, 0x2012).kind == Route::Kind::Fault);
}

TEST_CASE("spm-only run with the working set inside SPM") {
  auto k = gen_gather_kernel(20, 16, 3);
  auto res = testutil::run(k, Variant::SpmOnly);
  CHECK(res.stats.l1_accesses == 0);
  CHECK(res.stats.dram_accesses == 0);
  CHECK(res.stats.total_cycles == 4 * (20 + 1));  // SPM never stalls
  CHECK(res.stats.utilization() == doctest::Approx(1.0));
}

TEST_CASE("load miss then identical load merges") {
  Rig rig(geom(64, 4), {4}, {32});
  auto a = rig.l1.load(0, 0x100, 1, 0);
  CHECK(a.outcome == AccessOutcome::MissAllocated);
  auto b = rig.l1.load(0, 0x104, 2, 1);
  CHECK(b.outcome == AccessOutcome::MissMerged);
  CHECK(b.mshr == a.mshr);
}

TEST_CASE("MSHR exhaustion") {
  Rig rig(geom(64, 4, 1, 4), {4}, {32});
  for (Addr i = 0; i < 4; ++i) CHECK(rig.l1.load(0, 0x1000 * (i + 1), i, 0).outcome == AccessOutcome::MissAllocated);
  CHECK(rig.l1.load(0, 0x9000, 9, 0).outcome == AccessOutcome::MshrFull);
  CHECK(rig.l1.outstanding(0) == 4);
}

TEST_CASE("store miss uses the store buffer and applies on fill") {
  CacheGeometry g = geom(64, 4);
  g.store_buffer_slots = 2;
  Rig rig(g, {4}, {32});
  CHECK(rig.l1.store(0, 0x200, 11, 0).outcome == AccessOutcome::MissAllocated);
  CHECK(rig.l1.store(0, 0x400, 12, 0).outcome == AccessOutcome::MissAllocated);
  CHECK(rig.l1.store(0, 0x600, 13, 0).outcome == AccessOutcome::StoreBufferFull);
  Cycle now = 0;
  rig.drain(now);
  CHECK(rig.l1.store_buffer_empty(0));
  CHECK(rig.l1.load(0, 0x200, 1, now).data == 11);
}

TEST_CASE("fill extracts the word at the LST offset") {
  Rig rig(geom(64, 4), {4}, {32});
  rig.backing.write_word(0x308, 0xABCD);
  CHECK(rig.l1.load(0, 0x308, 77, 0).outcome == AccessOutcome::MissAllocated);
  Cycle now = 0;
  auto c = rig.drain(now);
  REQUIRE(c.size() == 1);
  CHECK(c[0].token == 77);
  CHECK(c[0].value == 0xABCD);
  CHECK(now >= 80);  // cold L2 miss
}

TEST_CASE("read after a pending write to the same word sees the written data") {
  Rig rig(geom(64, 4), {4}, {32});
  rig.backing.write_word(0x500, 1);
  rig.l1.store(0, 0x500, 99, 0);
  rig.l1.load(0, 0x500, 5, 0);
  rig.l1.load(0, 0x504, 6, 0);
  Cycle now = 1;
  auto c = rig.drain(now);
  REQUIRE(c.size() == 2);
  for (auto& x : c) CHECK(x.value == (x.token == 5 ? 99u : 0u));
}

TEST_CASE("prefetch-only fill installs without completions") {
  Rig rig(geom(64, 4), {4}, {32});
  CHECK(rig.l1.prefetch(0, 0x700, 0).outcome == AccessOutcome::MissAllocated);
  CHECK(rig.l1.prefetch(0, 0x704, 0).outcome == AccessOutcome::Dropped);  // already pending
  Cycle now = 0;
  CHECK(rig.drain(now).empty());
  CHECK(rig.l1.present(0, 0x700));
}

TEST_CASE("L2 latencies") {
  BackingStore b;
  L2Cache l2({}, b);
  CHECK(l2.access(0x4000, 0) == 80);
  CHECK(l2.access(0x4000, 100) == 8);
  CHECK(l2.access(0x4000 + 64 * 2048, 100) == 80);
  // still in flight: no sooner than the original fill
  CHECK(l2.access(0x8000, 200) == 80);
  CHECK(l2.access(0x8000, 210) == 70);
}

TEST_CASE("L2 trace matches the reference LRU") {
  std::mt19937 rng(3);
  BackingStore b;
  L2Geometry g;
  g.size = 8192;
  g.line = 64;
  g.ways = 4;
  L2Cache l2(g, b);
  oracle::RefLru ref(8192 / (64 * 4), 4, 64);
  for (int i = 0; i < 10000; ++i) {
    Addr a = (rng() % 65536) & ~3u;
    REQUIRE(l2.access_functional(a, rng() % 4 == 0) == ref.access(a));
  }
}

TEST_CASE("L1 trace matches the reference LRU across geometries") {
  std::mt19937 rng(11);
  for (std::uint32_t sets : {1u, 2u, 4u, 16u, 64u})
    for (std::uint32_t ways : {1u, 2u, 3u, 4u, 8u})
      for (std::uint32_t m : {0u, 1u, 2u, 3u}) {
        CAPTURE(sets);
        CAPTURE(ways);
        CAPTURE(m);
        const std::uint32_t line = kPhysLineBytes << m;
        Rig rig(geom(sets << m, ways), {ways}, {line}, l2_128());
        oracle::RefLru ref(sets, ways, line);
        const Addr span = sets * ways * line * 3;
        for (int i = 0; i < 10000; ++i) {
          Addr a = (rng() % span) & ~3u;
          REQUIRE(rig.l1.access_functional(0, a, rng() % 3 == 0) == ref.access(a));
        }
        CHECK(rig.l1.partial_observations() == 0);
      }
}

TEST_CASE("victim selection is LRU within permitted ways") {
  Rig rig(geom(1, 2), {2}, {16});
  rig.l1.access_functional(0, 0x000, false);
  rig.l1.access_functional(0, 0x100, false);
  rig.l1.access_functional(0, 0x200, false);
  CHECK_FALSE(rig.l1.present(0, 0x000));
  CHECK(rig.l1.present(0, 0x100));
  CHECK(rig.l1.present(0, 0x200));
}

TEST_CASE("ways of another partition are never used") {
  Rig rig(geom(4, 4, 2), {2, 2}, {16, 16});
  for (Addr a = 0; a < 64; a += 16) rig.l1.access_functional(0, a, false);
  for (Addr a = 0x10000; a < 0x10000 + 4096; a += 16) rig.l1.access_functional(1, a, true);
  for (Addr a = 0; a < 64; a += 16) CHECK(rig.l1.present(0, a));
  for (std::uint32_t w = 0; w < 4; ++w) CHECK(rig.l1.way_owner(w) == (w < 2 ? 0u : 1u));
}

TEST_CASE("hit in the second physical set refreshes the representative") {
  // m = 1: 32-byte virtual lines over 2 physical sets, one virtual set.
  Rig rig(geom(2, 2), {2}, {32});
  rig.l1.access_functional(0, 0x000, false);  // A
  rig.l1.access_functional(0, 0x100, false);  // B
  CHECK(rig.l1.access_functional(0, 0x010, false));  // A, second physical line
  rig.l1.access_functional(0, 0x200, false);  // C evicts B
  CHECK(rig.l1.present(0, 0x000));
  CHECK_FALSE(rig.l1.present(0, 0x100));
}

TEST_CASE("partition isolation at L1") {
  std::mt19937 rng(17);
  std::vector<Addr> p0, p1;
  for (int i = 0; i < 5000; ++i) {
    p0.push_back((rng() % 8192) & ~3u);
    p1.push_back(0x100000 + ((rng() % 8192) & ~3u));
  }
  Rig alone(geom(16, 8, 2), {3, 5}, {32, 64});
  Rig both(geom(16, 8, 2), {3, 5}, {32, 64});
  for (int i = 0; i < 5000; ++i) {
    const bool h = alone.l1.access_functional(0, p0[i], false);
    both.l1.access_functional(1, p1[i], i % 2 == 0);
    REQUIRE(both.l1.access_functional(0, p0[i], false) == h);
  }
}

TEST_CASE("zero-way partition bypasses L1") {
  Rig rig(geom(16, 4, 2), {4, 0}, {32, 32});
  rig.backing.write_word(0x800, 5);
  CHECK_FALSE(rig.l1.access_functional(1, 0x800, false));
  CHECK_FALSE(rig.l1.access_functional(1, 0x800, false));
  auto r = rig.l1.load(1, 0x800, 3, 0);
  CHECK(r.outcome == AccessOutcome::MissAllocated);
  Cycle now = 0;
  auto c = rig.drain(now);
  REQUIRE(c.size() == 1);
  CHECK(c[0].value == 5);
  CHECK_FALSE(rig.l1.present(1, 0x800));
}

TEST_CASE("apply_plan: identity and single-way move") {
  Rig rig(geom(16, 4, 2), {2, 2}, {16, 16});
  Cycle now = 0;
  for (Addr a = 0; a < 16 * 16 * 2; a += 16) {
    rig.l1.store(0, a, a + 1, now);
    rig.drain(now);
  }
  const auto before = rig.l1.invalidated_lines();
  CHECK(rig.l1.apply_plan({2, 2}, {16, 16}) == 0);
  CHECK(rig.l1.invalidated_lines() == before);
  // Move one of partition 0's ways: only its 16 lines go (all dirty).
  CHECK(rig.l1.apply_plan({1, 3}, {16, 16}) == 16);
  CHECK(rig.l1.invalidated_lines() == before + 16);
  CHECK(rig.l1.way_counts() == std::vector<std::uint32_t>{1, 3});
  CHECK_THROWS(rig.l1.apply_plan({3, 3}, {16, 16}));
  CHECK_THROWS(rig.l1.apply_plan({1, 3}, {16, 256}));
  // The written-back data is still visible through the hierarchy.
  for (Addr a = 0; a < 16 * 16 * 2; a += 16) {
    auto r = rig.l1.load(0, a, a, now);
    if (r.outcome == AccessOutcome::Hit) {
      CHECK(r.data == a + 1);
    } else {
      auto c = rig.drain(now);
      REQUIRE(c.size() == 1);
      CHECK(c[0].value == a + 1);
    }
  }
}

TEST_CASE("outstanding misses never exceed the MSHR count") {
  auto k = gen_quad_kernel(512, 8192, 4);
  SimOptions o;
  o.hw = preset_config("base");
  o.hw.mshr = 2;
  Simulator sim(k, o);
  while (!sim.finished()) {
    sim.tick();
    REQUIRE(sim.memory().l1().outstanding(0) <= 2);
  }
}

TEST_CASE("access counts are conserved through the hierarchy") {
  auto k = gen_gather_kernel(3000, 256, 2);
  for (auto v : {Variant::Cache, Variant::Runahead}) {
    auto res = testutil::run(k, v);
    CHECK(res.stats.l2_accesses == res.stats.l1_mshr_allocs);
    CHECK(res.stats.dram_accesses == res.stats.l2_misses);
  }
}

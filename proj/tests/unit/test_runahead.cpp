#include <doctest.h>

#include "cgra/kernel_gen.hpp"
#include "cgra/runahead.hpp"
#include "cgra/simulator.hpp"
#include "helpers.hpp"

using namespace cgra;

namespace {

struct PendingPort : MemoryPort {
  LoadReply submit(const MemoryRequest& r) override {
    return r.kind == MemoryRequest::Kind::Load ? LoadReply::pending() : LoadReply::ready({});
  }
};

// Two rows of loads in context 0 (one or both active), a cached region and
// an SPM region in virtual SPM 0.
KernelProgram two_loads(bool both) {
  std::string text =
      "grid 4 4\nii 2\ntrip 4\n"
      "region d 0x1000 1024 vspm=0\n"
      "region s 0x3000 16 spm vspm=0\n"
      "data s 1 0x55\n"
      "pe 0 0 0 LOAD r0 - - r1 0x1000\n"
      "pe 0 0 1 ADD r0 #64 - r0 0\n";
  if (both) text += "pe 1 0 0 LOAD r0 - - r1 0x1800\n";
  return parse_kernel(text);
}

int dummy_count(const PEArray& a) {
  int n = 0;
  for (const auto& pe : a.snapshot().pes) {
    n += pe.out.dummy;
    for (const auto& r : pe.regs) n += r.dummy;
  }
  return n;
}

struct Rig {
  KernelProgram k;
  MemorySystem mem;
  PEArray array;
  RunaheadController ra;
  explicit Rig(bool both) : k(two_loads(both)), mem(preset_config("base"), k), array(k), ra(mem, 512) {
    PendingPort p;
    array.step(0, p);
    ra.enter(array, 0);
  }
  void settle(Cycle& now) {
    for (int i = 0; i < 200; ++i, ++now) {
      mem.l1().fill(now);
      mem.l1().issue(now);
    }
  }
};

}  // namespace

TEST_CASE("entry poisons exactly the pending destinations") {
  Rig one(false);
  CHECK(one.array.mode() == Mode::Runahead);
  CHECK(dummy_count(one.array) == 1);
  Rig two(true);
  CHECK(two.array.pending_ids().size() == 2);
  CHECK(dummy_count(two.array) == 2);
}

TEST_CASE("runahead loads") {
  Rig rig(false);
  const auto before = rig.mem.l1().stats(0).accesses;
  CHECK(rig.ra.load(0, TaggedWord::poison(), 1).dummy);
  CHECK(rig.mem.l1().stats(0).accesses == before);
  CHECK(rig.mem.l1().outstanding(0) == 0);
  // SPM data is real
  CHECK(rig.ra.load(0, TaggedWord::clean(0x3004), 1) == TaggedWord::clean(0x55));
  // outside every region: dummy, no traffic
  CHECK(rig.ra.load(0, TaggedWord::clean(0x9000), 1).dummy);
  // cold cached block: dummy now, prefetched later
  CHECK(rig.ra.load(0, TaggedWord::clean(0x1400), 1).dummy);
  CHECK(rig.mem.l1().pending(0, 0x1400));
  Cycle now = 2;
  rig.settle(now);
  CHECK(rig.mem.l1().present(0, 0x1400));
  CHECK_FALSE(rig.ra.load(0, TaggedWord::clean(0x1400), now).dummy);
}

TEST_CASE("runahead stores go to the temp store only") {
  Rig rig(false);
  rig.mem.backing().write_word(0x1600, 7);
  rig.ra.store(0, TaggedWord::clean(0x1600), TaggedWord::clean(42), 1);
  CHECK(rig.ra.load(0, TaggedWord::clean(0x1600), 1) == TaggedWord::clean(42));
  CHECK(rig.mem.l1().pending(0, 0x1600));  // write converted into a prefetch
  // dummy data: fully discarded
  rig.ra.store(0, TaggedWord::clean(0x1A00), TaggedWord::poison(), 1);
  CHECK_FALSE(rig.mem.l1().pending(0, 0x1A00));
  CHECK(rig.ra.load(0, TaggedWord::clean(0x1A00), 1).dummy);
  // dummy address: discarded
  rig.ra.store(0, TaggedWord::poison(), TaggedWord::clean(1), 1);
  // SPM store stays out of the SPM
  rig.ra.store(0, TaggedWord::clean(0x3004), TaggedWord::clean(9), 1);
  CHECK(rig.mem.spm_read(1, 0x3004) == 0x55);
  Cycle now = 2;
  rig.settle(now);
  CHECK(rig.mem.l1().present(0, 0x1600));
  // architectural stores are refused while running ahead
  CHECK_THROWS(rig.mem.l1().store(0, 0x1600, 1, now));
  auto ids = rig.array.pending_ids();
  rig.ra.hold({ids[0], 3, 0});
  REQUIRE(rig.ra.maybe_exit(rig.array, now));
  auto img = rig.mem.final_image();
  CHECK(img[0][(0x1600 - 0x1000) / 4] == 7);
  CHECK(img[1][1] == 0x55);
  // the temp store was cleared on exit
  rig.array.save_state();
  CHECK(rig.ra.load(0, TaggedWord::clean(0x1600), now).value == 7);
}

TEST_CASE("exit waits for every trigger") {
  Rig rig(true);
  auto ids = rig.array.pending_ids();
  REQUIRE(ids.size() == 2);
  CHECK_FALSE(rig.ra.maybe_exit(rig.array, 10));
  rig.ra.hold({ids[0], 11, 0});
  CHECK_FALSE(rig.ra.maybe_exit(rig.array, 20));
  rig.ra.hold({ids[1], 22, 0});
  CHECK(rig.ra.maybe_exit(rig.array, 30));
  REQUIRE(rig.ra.episodes().size() == 1);
  CHECK(rig.ra.episodes()[0].exit_cycle == 30);
  CHECK(rig.array.mode() == Mode::Normal);
  CHECK_FALSE(rig.array.has_pending());
  CHECK_FALSE(rig.array.any_dummy());
  CHECK(rig.array.pe(0, 0).regs[1] == TaggedWord::clean(11));
  CHECK(rig.array.pe(1, 0).regs[1] == TaggedWord::clean(22));
}

TEST_CASE("temp store evicts oldest and counts lost reads") {
  TempStore t(8);
  t.write(0x10, 1);
  t.write(0x14, 2);
  t.write(0x10, 5);  // update in place
  t.write(0x18, 3);
  CHECK(t.evictions() == 1);
  CHECK_FALSE(t.find(0x10));
  CHECK(t.lost_reads() == 1);
  CHECK(*t.find(0x14) == 2);
  t.clear();
  CHECK(t.size() == 0);
  CHECK_THROWS_AS(TempStore(2), ConfigError);
}

TEST_CASE("prefetch classification") {
  using K = PrefetchEvent::Kind;
  std::vector<PrefetchEvent> log = {
      {K::Issued, 0, 0x100, 1}, {K::Installed, 0, 0x100, 5}, {K::DemandHit, 0, 0x100, 9},     // used
      {K::Issued, 0, 0x200, 1}, {K::LateUse, 0, 0x200, 3},                                    // used (late)
      {K::Issued, 0, 0x300, 1}, {K::Installed, 0, 0x300, 5}, {K::Evicted, 0, 0x300, 7},
      {K::DemandMiss, 0, 0x300, 9},                                                           // evicted
      {K::Issued, 1, 0x100, 1}, {K::Installed, 1, 0x100, 5},                                  // useless
  };
  auto s = classify_prefetches(log, 6);
  CHECK(s.total == 4);
  CHECK(s.used == 2);
  CHECK(s.evicted == 1);
  CHECK(s.useless == 1);
  CHECK(s.used + s.evicted + s.useless == s.total);
  CHECK(s.accuracy == doctest::Approx(0.75));
  CHECK(s.coverage == doctest::Approx(2.0 / 8.0));
  auto all = classify_prefetches({{K::Issued, 0, 0, 0}, {K::Installed, 0, 0, 1}, {K::DemandHit, 0, 0, 2}}, 0);
  CHECK(all.useless == 0);
  CHECK(all.accuracy == 1.0);
}

TEST_CASE("runahead leaves results bit-identical and classes consistent") {
  for (std::uint64_t seed : {1u, 2u}) {
    auto k = gen_gather_kernel(2000, 256, seed);
    auto c = testutil::run(k, Variant::Cache, "runahead");
    auto r = testutil::run(k, Variant::Runahead, "runahead");
    CHECK(c.image == r.image);
    CHECK(r.stats.runahead_episodes > 0);
    CHECK(r.stats.pf_used + r.stats.pf_evicted + r.stats.pf_useless == r.stats.prefetches);
    CHECK(r.stats.total_cycles < c.stats.total_cycles);
    for (const auto& e : r.episodes) CHECK(e.exit_cycle > e.entry_cycle);
  }
}

TEST_CASE("a thrashing L1 produces evicted prefetches") {
  auto k = gen_gather_kernel(3000, 1024, 3);
  SimOptions o;
  o.variant = Variant::Runahead;
  o.hw = preset_config("runahead");
  o.hw.l1_size = 256;
  o.hw.l1_ways = 1;
  auto r = simulate(k, o);
  CHECK(r.stats.pf_evicted > 0);
}

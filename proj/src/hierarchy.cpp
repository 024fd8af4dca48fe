#include "cgra/hierarchy.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace cgra {

HierarchyConfig preset_config(std::string_view name) {
  HierarchyConfig c;
  c.preset = std::string(name);
  if (name == "base") {
    c.l1_line = 32;
    c.l2.line = 32;
  } else if (name == "runahead") {
    c.l1_line = 64;
    c.l2.line = 64;
  } else if (name == "reconfig") {
    c.grid_rows = c.grid_cols = 8;
    c.num_vspm = 4;
    c.spm_bytes = 2048;
    c.l1_count = 4;
    c.l1_size = 4096;
    c.l1_line = 64;
    c.l1_ways = 8;
    c.l2.line = 128;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (base|runahead|reconfig)");
  }
  return c;
}

void HierarchyConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (num_vspm == 0 || rows_per_vspm == 0) fail("need at least one virtual SPM");
  if (l1_count == 0 || l1_count > num_vspm) fail("L1 count must be in [1, number of virtual SPMs]");
  if (l1_ways == 0) fail("L1 needs at least one way");
  if (mshr == 0) fail("MSHR entries must be positive");
  if (store_buffer == 0) fail("store buffer must have at least one slot");
  if (l1_size == 0 || l1_size % (kPhysLineBytes * l1_ways) != 0)
    fail("L1 size must be a multiple of 16 bytes x ways");
  if (!is_pow2(phys_sets())) fail("L1 set count must be a power of two");
  if (std::find(kLineSizes.begin(), kLineSizes.end(), l1_line) == kLineSizes.end())
    fail("L1 line must be one of 16, 32, 64, 128");
  if (l1_line > l2.line) fail("L1 line may not exceed the L2 line");
  if (l1_line / kPhysLineBytes > phys_sets()) fail("L1 line spans more than one way");
  if (!is_pow2(l2.line) || l2.line < 16 || l2.line > 128) fail("L2 line must be a power of two in [16, 128]");
  if (l2.ways == 0 || l2.size % (l2.line * l2.ways) != 0 || !is_pow2(l2.size / (l2.line * l2.ways)))
    fail("L2 geometry must give a power-of-two set count");
  if (l2.hit_latency == 0 || l2.miss_latency < l2.hit_latency) fail("L2 latencies out of order");
  if (temp_store_bytes < kWordBytes) fail("runahead temp store too small");
}

std::string HierarchyConfig::describe() const {
  std::ostringstream os;
  os << "preset=" << preset << " vspm=" << num_vspm << "x" << spm_bytes << "B l1=" << l1_count << "x"
     << l1_size << "B/" << l1_line << "B/" << l1_ways << "w mshr=" << mshr << " sb=" << store_buffer
     << " l2=" << l2.size << "B/" << l2.line << "B/" << l2.ways << "w lat=" << l2.hit_latency << "/"
     << l2.miss_latency;
  return os.str();
}

namespace {

std::uint32_t to_u32(std::string_view key, std::string_view v) {
  std::uint32_t out = 0;
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    v.remove_prefix(2);
    base = 16;
  }
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError("bad value '" + std::string(v) + "' for " + std::string(key));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void apply_setting(HierarchyConfig& c, std::string_view key_in, std::string_view value) {
  std::string key(key_in);
  std::replace(key.begin(), key.end(), '-', '_');
  auto u = [&] { return to_u32(key, value); };
  if (key == "preset") c = preset_config(value);
  else if (key == "grid_rows") c.grid_rows = u();
  else if (key == "grid_cols") c.grid_cols = u();
  else if (key == "num_vspm") c.num_vspm = u();
  else if (key == "rows_per_vspm") c.rows_per_vspm = u();
  else if (key == "spm_bytes" || key == "spm_size") c.spm_bytes = u();
  else if (key == "l1_count") c.l1_count = u();
  else if (key == "l1_size") c.l1_size = u();
  else if (key == "l1_line") c.l1_line = c.l2.line = u();
  else if (key == "l1_ways") c.l1_ways = u();
  else if (key == "mshr") c.mshr = u();
  else if (key == "store_buffer") c.store_buffer = u();
  else if (key == "temp_store_bytes") c.temp_store_bytes = u();
  else if (key == "l2_size") c.l2.size = u();
  else if (key == "l2_line") c.l2.line = u();
  else if (key == "l2_ways") c.l2.ways = u();
  else if (key == "l2_hit_latency") c.l2.hit_latency = u();
  else if (key == "l2_miss_latency") c.l2.miss_latency = u();
  else throw ConfigError("unknown config key '" + key + "'");
}

HierarchyConfig parse_config(std::string_view text) {
  HierarchyConfig c = preset_config("base");
  int lineno = 0;
  bool seen_other = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected key = value");
    auto key = trim(line.substr(0, eq));
    auto val = trim(line.substr(eq + 1));
    if (key == "preset" && seen_other) throw ParseError(lineno, "preset must precede other keys");
    if (key != "preset") seen_other = true;
    try {
      apply_setting(c, key, val);
    } catch (const ConfigError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  c.validate();
  return c;
}

std::vector<bool> place_regions(const KernelProgram& k, const HierarchyConfig& cfg) {
  std::vector<bool> in(k.regions.size(), false);
  std::vector<std::uint64_t> used(cfg.num_vspm, 0);
  for (std::size_t i = 0; i < k.regions.size(); ++i) {
    const Region& r = k.regions[i];
    if (!r.spm || r.vspm >= cfg.num_vspm) continue;
    const std::uint64_t bytes = std::uint64_t{r.words} * kWordBytes;
    if (used[r.vspm] + bytes <= cfg.spm_bytes) {
      used[r.vspm] += bytes;
      in[i] = true;
    }
  }
  return in;
}

MemorySystem::MemorySystem(const HierarchyConfig& cfg, const KernelProgram& program)
    : cfg_(cfg), prog_(program) {
  cfg_.validate();
  for (const auto& [key, pc] : program.pe_configs)
    if (is_memory_op(pc.op) && vspm_of_row(key.row) >= cfg_.num_vspm)
      throw ConfigError("edge PE row " + std::to_string(key.row) + " has no virtual SPM in " +
                        cfg_.preset);
  for (const auto& r : program.regions)
    if (r.vspm >= cfg_.num_vspm)
      throw ConfigError("region " + r.name + " names virtual SPM " + std::to_string(r.vspm) +
                        " but only " + std::to_string(cfg_.num_vspm) + " exist");

  l2_ = std::make_unique<L2Cache>(cfg_.l2, backing_);
  CacheGeometry g;
  g.phys_sets = cfg_.phys_sets();
  g.total_ways = cfg_.total_ways();
  g.partitions = cfg_.l1_count;
  g.mshr_entries = cfg_.mshr;
  g.store_buffer_slots = cfg_.store_buffer;
  g.max_line = cfg_.l2.line;
  l1_ = std::make_unique<CacheUnit>(g, *l2_);
  l1_->configure(std::vector<std::uint32_t>(cfg_.l1_count, cfg_.l1_ways),
                 std::vector<std::uint32_t>(cfg_.l1_count, cfg_.l1_line));

  in_spm_ = place_regions(program, cfg_);
  spm_.resize(program.regions.size());
  for (std::size_t i = 0; i < program.regions.size(); ++i) {
    const Region& r = program.regions[i];
    if (in_spm_[i]) {
      spm_[i] = r.init;
    } else {
      for (std::uint32_t w = 0; w < r.words; ++w)
        if (r.init[w] != 0) backing_.write_word(r.base + w * kWordBytes, r.init[w]);
    }
  }
}

Route MemorySystem::route(std::uint32_t row, Addr addr) const {
  Route rt;
  rt.vspm = vspm_of_row(row);
  if (addr % kWordBytes != 0) return rt;
  for (std::size_t i = 0; i < prog_.regions.size(); ++i) {
    const Region& r = prog_.regions[i];
    if (!r.contains(addr)) continue;
    if (r.vspm != rt.vspm) return rt;  // another partition's data
    rt.region = static_cast<int>(i);
    rt.partition = partition_of_vspm(rt.vspm);
    rt.kind = in_spm_[i] ? Route::Kind::Spm : Route::Kind::Cache;
    return rt;
  }
  return rt;
}

Word MemorySystem::spm_read(int region, Addr addr) const {
  const Region& r = prog_.regions.at(static_cast<std::size_t>(region));
  return spm_.at(static_cast<std::size_t>(region)).at((addr - r.base) / kWordBytes);
}

void MemorySystem::spm_write(int region, Addr addr, Word v) {
  const Region& r = prog_.regions.at(static_cast<std::size_t>(region));
  spm_.at(static_cast<std::size_t>(region)).at((addr - r.base) / kWordBytes) = v;
}

MemoryImage MemorySystem::final_image() {
  l1_->flush();
  l2_->flush();
  MemoryImage img(prog_.regions.size());
  for (std::size_t i = 0; i < prog_.regions.size(); ++i) {
    const Region& r = prog_.regions[i];
    if (in_spm_[i]) {
      img[i] = spm_[i];
      continue;
    }
    img[i].resize(r.words);
    for (std::uint32_t w = 0; w < r.words; ++w) img[i][w] = backing_.read_word(r.base + w * kWordBytes);
  }
  return img;
}

std::uint64_t image_digest(const MemoryImage& image) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (const auto& region : image) {
    for (Word w : region)
      for (int i = 0; i < 4; ++i) mix(static_cast<std::uint8_t>(w >> (8 * i)));
    mix(0xA5);  // region separator
  }
  return h;
}

MemoryImage initial_image(const KernelProgram& k) {
  MemoryImage img;
  for (const auto& r : k.regions) img.push_back(r.init);
  return img;
}

}  // namespace cgra

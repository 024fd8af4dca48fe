#include "cgra/l2_cache.hpp"

#include <algorithm>
#include <cstring>

namespace cgra {

std::uint8_t BackingStore::read_byte(Addr a) const {
  auto it = pages_.find(a / kPageBytes);
  return it == pages_.end() ? 0 : (*it->second)[a % kPageBytes];
}

void BackingStore::write_byte(Addr a, std::uint8_t v) {
  auto& p = pages_[a / kPageBytes];
  if (!p) p = std::make_unique<Page>(Page{});
  (*p)[a % kPageBytes] = v;
}

void BackingStore::read(Addr a, std::uint8_t* out, std::size_t n) const {
  for (std::size_t i = 0; i < n; ++i) out[i] = read_byte(static_cast<Addr>(a + i));
}

void BackingStore::write(Addr a, const std::uint8_t* in, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) write_byte(static_cast<Addr>(a + i), in[i]);
}

Word BackingStore::read_word(Addr a) const {
  std::uint8_t b[4];
  read(a, b, 4);
  return Word{b[0]} | Word{b[1]} << 8 | Word{b[2]} << 16 | Word{b[3]} << 24;
}

void BackingStore::write_word(Addr a, Word v) {
  const std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
  write(a, b, 4);
}

L2Cache::L2Cache(const L2Geometry& g, BackingStore& backing) : g_(g), backing_(backing) {
  if (!is_pow2(g.line) || g.line < 16) throw ConfigError("L2 line size must be a power of two >= 16");
  if (g.ways == 0 || g.size % (g.line * g.ways) != 0)
    throw ConfigError("L2 size must be a multiple of line * ways");
  sets_ = g.size / (g.line * g.ways);
  if (!is_pow2(sets_)) throw ConfigError("L2 set count must be a power of two");
  lines_.resize(std::size_t{sets_} * g.ways);
}

L2Cache::Line* L2Cache::find(Addr addr) {
  const std::size_t base = index(addr) * g_.ways;
  const Addr tag = tag_of(addr);
  for (std::uint32_t w = 0; w < g_.ways; ++w) {
    Line& l = lines_[base + w];
    if (l.valid && l.tag == tag) return &l;
  }
  return nullptr;
}

const L2Cache::Line* L2Cache::find(Addr addr) const {
  return const_cast<L2Cache*>(this)->find(addr);
}

L2Cache::Line& L2Cache::allocate(Addr addr, Cycle ready) {
  const std::size_t set = index(addr);
  const std::size_t base = set * g_.ways;
  Line* victim = nullptr;
  for (std::uint32_t w = 0; w < g_.ways && !victim; ++w)
    if (!lines_[base + w].valid) victim = &lines_[base + w];
  if (!victim) {
    victim = &lines_[base];
    for (std::uint32_t w = 1; w < g_.ways; ++w)
      if (lines_[base + w].stamp < victim->stamp) victim = &lines_[base + w];
  }
  if (victim->valid && victim->dirty) {
    const Addr old = static_cast<Addr>((std::uint64_t{victim->tag} * sets_ + set) * g_.line);
    backing_.write(old, victim->data.data(), g_.line);
    ++stats_.writebacks_out;
  }
  const Addr line_addr = addr - addr % g_.line;
  victim->valid = true;
  victim->dirty = false;
  victim->tag = tag_of(addr);
  victim->stamp = ++clock_;
  victim->ready = ready;
  victim->data.resize(g_.line);
  backing_.read(line_addr, victim->data.data(), g_.line);
  return *victim;
}

std::uint32_t L2Cache::access(Addr addr, Cycle now) {
  ++stats_.reads;
  if (Line* l = find(addr)) {
    ++stats_.read_hits;
    l->stamp = ++clock_;
    const Cycle wait = l->ready > now ? l->ready - now : 0;
    return static_cast<std::uint32_t>(std::max<Cycle>(g_.hit_latency, wait));
  }
  ++stats_.read_misses;
  allocate(addr, now + g_.miss_latency);
  return g_.miss_latency;
}

void L2Cache::peek(Addr addr, std::uint8_t* out, std::size_t n) const {
  for (std::size_t i = 0; i < n; ++i) {
    const Addr a = static_cast<Addr>(addr + i);
    const Line* l = find(a);
    out[i] = l ? l->data[a % g_.line] : backing_.read_byte(a);
  }
}

void L2Cache::write(Addr addr, const std::uint8_t* in, const bool* mask, std::size_t n) {
  ++stats_.writebacks_in;
  std::size_t i = 0;
  while (i < n) {
    const Addr a = static_cast<Addr>(addr + i);
    Line* l = find(a);
    if (!l) l = &allocate(a, 0);
    const std::size_t chunk = std::min<std::size_t>(n - i, g_.line - a % g_.line);
    for (std::size_t j = 0; j < chunk; ++j)
      if (!mask || mask[i + j]) {
        l->data[(a % g_.line) + j] = in[i + j];
        l->dirty = true;
      }
    l->stamp = ++clock_;
    i += chunk;
  }
}

bool L2Cache::access_functional(Addr addr, bool is_write) {
  if (Line* l = find(addr)) {
    l->stamp = ++clock_;
    if (is_write) l->dirty = true;
    return true;
  }
  Line& l = allocate(addr, 0);
  if (is_write) l.dirty = true;
  return false;
}

void L2Cache::flush() {
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    Line& l = lines_[i];
    if (!l.valid || !l.dirty) continue;
    const std::size_t set = i / g_.ways;
    const Addr a = static_cast<Addr>((std::uint64_t{l.tag} * sets_ + set) * g_.line);
    backing_.write(a, l.data.data(), g_.line);
    l.dirty = false;
    ++stats_.writebacks_out;
  }
}

}  // namespace cgra

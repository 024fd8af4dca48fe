#include "cgra/kernel_gen.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include "cgra/rng.hpp"

namespace cgra {

namespace {

// Stream indices for derive_seed.
enum : std::uint64_t {
  kStreamEdgeStart = 0,
  kStreamEdgeEnd = 1,
  kStreamWeight = 2,
  kStreamFeature = 3,
  kStreamPatternData = 4,
  kStreamPatternKey = 5,
  kStreamKeys = 6,
  kStreamMix = 7,
  kStreamQuad = 8,
};

constexpr Word kSmallValue = 1u << 16;

Addr next_base(const KernelProgram& k) {
  if (k.regions.empty()) return kDataBase;
  const std::uint64_t end = k.regions.back().end();
  return static_cast<Addr>(((end + 15) & ~std::uint64_t{15}) + 16);
}

Region& add_region(KernelProgram& k, std::string name, std::uint32_t words, std::uint32_t vspm, bool spm,
                   std::optional<Addr> base = std::nullopt) {
  Region r;
  r.name = std::move(name);
  r.base = base ? *base : next_base(k);
  r.words = words;
  r.vspm = vspm;
  r.spm = spm;
  r.init.assign(words, 0);
  if (std::uint64_t{r.base} + std::uint64_t{words} * kWordBytes > 0xFFFFFFF0ULL)
    throw ValidationError("region " + r.name + " does not fit the address space");
  k.regions.push_back(std::move(r));
  return k.regions.back();
}

PEConfig op(Opcode o, Operand a, Operand b, Dest d, Word imm = 0, Operand c = Operand::none()) {
  PEConfig p;
  p.op = o;
  p.src_a = a;
  p.src_b = b;
  p.src_c = c;
  p.dest = d;
  p.imm = imm;
  return p;
}

Operand R(unsigned r) { return Operand::reg(r); }
Operand I(Word v) { return Operand::imm(v); }
Dest D(unsigned r) { return Dest::to_reg(r); }

// Appends stream_hash(r_k, key) into `dst`, clobbering `tmp`.
void emit_hash(std::vector<PEConfig>& ops, unsigned k, std::uint32_t key, unsigned dst, unsigned tmp) {
  ops.push_back(op(Opcode::ADD, R(k), I(key), D(dst)));
  ops.push_back(op(Opcode::MUL, R(dst), I(kHashMulA), D(dst)));
  ops.push_back(op(Opcode::LSHR, R(dst), I(16), D(tmp)));
  ops.push_back(op(Opcode::XOR, R(dst), R(tmp), D(dst)));
  ops.push_back(op(Opcode::MUL, R(dst), I(kHashMulB), D(dst)));
  ops.push_back(op(Opcode::LSHR, R(dst), I(13), D(tmp)));
  ops.push_back(op(Opcode::XOR, R(dst), R(tmp), D(dst)));
}

// Checksum fold of r2 into r3, stored to `acc`, then k += 1 in r0.
void emit_fold(std::vector<PEConfig>& ops, Addr acc) {
  ops.push_back(op(Opcode::MUL, R(3), I(31), D(3)));
  ops.push_back(op(Opcode::ADD, R(3), R(2), D(3)));
  ops.push_back(op(Opcode::STORE, Operand::none(), R(3), Dest::none(), acc));
  ops.push_back(op(Opcode::ADD, R(0), I(1), D(0)));
}

void place(KernelProgram& k, std::uint32_t row, const std::vector<PEConfig>& ops) {
  for (std::uint32_t i = 0; i < ops.size(); ++i) k.pe_configs[SlotKey{row, 0, i}] = ops[i];
}

// Region accessed through r1 (byte offset) with random index into `words`.
void emit_random_offset(std::vector<PEConfig>& ops, std::uint32_t key, std::uint32_t words) {
  emit_hash(ops, 0, key, 1, 2);
  ops.push_back(op(Opcode::AND, R(1), I(words - 1), D(1)));
  ops.push_back(op(Opcode::SHL, R(1), I(2), D(1)));
}

void fill_random(Region& r, std::uint64_t seed, Word bound = 0) {
  Rng rng(seed);
  for (auto& w : r.init) w = bound ? rng.below(bound) : static_cast<Word>(rng.next());
}

KernelProgram build_gather(std::vector<Word> es, std::vector<Word> ee, std::vector<Word> wt,
                           std::uint32_t num_nodes, std::uint64_t seed, std::uint32_t rows,
                           std::uint32_t cols, std::uint32_t feature_len) {
  if (rows < 4 || cols < 4) throw ValidationError("gather kernel needs a grid of at least 4x4");
  if (num_nodes == 0 || es.empty()) throw ValidationError("gather kernel needs edges and nodes");
  if (feature_len == 0) throw ValidationError("feature length must be positive");
  if (std::uint64_t{num_nodes} * feature_len * kWordBytes > (1u << 28))
    throw ValidationError("node arrays exceed the simulated address space");
  for (std::size_t i = 0; i < es.size(); ++i)
    if (es[i] >= num_nodes || ee[i] >= num_nodes) throw ValidationError("edge endpoint out of node range");

  KernelProgram k;
  k.name = "gather";
  k.grid_rows = rows;
  k.grid_cols = cols;
  k.initiation_interval = 4;
  k.trip_count = static_cast<std::uint32_t>(es.size());
  const auto n = static_cast<std::uint32_t>(es.size());
  // Rows 0-1 feed virtual SPM 0, rows 2-3 virtual SPM 1.
  add_region(k, "edge_start", n, 1, true).init = std::move(es);
  add_region(k, "edge_end", n, 0, true).init = std::move(ee);
  add_region(k, "weight", n, 0, true).init = std::move(wt);
  fill_random(add_region(k, "feature", num_nodes * feature_len, 0, true), derive_seed(seed, kStreamFeature),
              kSmallValue);
  add_region(k, "output", num_nodes * feature_len, 1, true);
  const Addr ES = k.regions[0].base, EE = k.regions[1].base, W = k.regions[2].base,
             F = k.regions[3].base, O = k.regions[4].base;
  const Word scale = 4 * feature_len;

  auto put = [&](std::uint32_t r, std::uint32_t c, std::uint32_t ctx, PEConfig p, std::uint32_t stage = 0) {
    p.stage = stage;
    k.pe_configs[SlotKey{r, c, ctx}] = p;
  };
  // ctx 0: edge_end[i] -> (0,0).o ; weight[i] -> (1,0).r1
  put(0, 0, 0, op(Opcode::LOAD, R(0), Operand::none(), Dest::out(), EE));
  put(1, 0, 0, op(Opcode::LOAD, R(0), Operand::none(), D(1), W));
  // ctx 1: byte offset of the feature; edge_start[i] -> (3,0).o
  put(0, 0, 1, op(Opcode::ADD, R(0), I(4), D(0)));
  put(0, 1, 1, op(Opcode::MUL, Operand::west(), I(scale), Dest::out()));
  put(1, 0, 1, op(Opcode::ADD, R(0), I(4), D(0)));
  put(3, 0, 1, op(Opcode::LOAD, R(0), Operand::none(), Dest::out(), ES));
  // ctx 2: feature gather; output byte offset on (2,0)
  put(0, 0, 2, op(Opcode::LOAD, Operand::east(), Operand::none(), Dest::out(), F));
  put(3, 0, 2, op(Opcode::ADD, R(0), I(4), D(0)));
  put(2, 0, 2, op(Opcode::MUL, Operand::south(), I(scale), Dest::out()));
  // ctx 3: product and the current partial sum
  put(1, 0, 3, op(Opcode::MUL, Operand::north(), R(1), Dest::out()));
  put(3, 0, 3, op(Opcode::LOAD, Operand::north(), Operand::none(), Dest::out(), O));
  // next step, stage 1: accumulate and write back
  put(2, 0, 0, op(Opcode::ADD, Operand::south(), Operand::north(), D(1)), 1);
  put(2, 0, 1, op(Opcode::STORE, Operand::out(), R(1), Dest::none(), O), 1);
  k.validate();
  return k;
}

}  // namespace

KernelProgram gen_gather_kernel(std::uint32_t num_edges, std::uint32_t num_nodes, std::uint64_t seed,
                                std::uint32_t grid_rows, std::uint32_t grid_cols, std::uint32_t feature_len) {
  if (num_edges == 0 || num_nodes == 0) throw ValidationError("gather kernel needs edges and nodes");
  std::vector<Word> es(num_edges), ee(num_edges), wt(num_edges);
  Rng rs(derive_seed(seed, kStreamEdgeStart)), re(derive_seed(seed, kStreamEdgeEnd)),
      rw(derive_seed(seed, kStreamWeight));
  for (std::uint32_t i = 0; i < num_edges; ++i) {
    es[i] = rs.below(num_nodes);
    ee[i] = re.below(num_nodes);
    wt[i] = rw.below(kSmallValue);
  }
  return build_gather(std::move(es), std::move(ee), std::move(wt), num_nodes, seed, grid_rows, grid_cols,
                      feature_len);
}

KernelProgram gen_gather_from_edges(const std::vector<Edge>& edges, std::uint32_t num_nodes,
                                    std::uint64_t seed, std::uint32_t grid_rows, std::uint32_t grid_cols,
                                    std::uint32_t feature_len) {
  std::vector<Word> es, ee, wt;
  for (const auto& e : edges) {
    es.push_back(e.dst);  // accumulate into the destination node
    ee.push_back(e.src);
    wt.push_back(e.weight);
  }
  return build_gather(std::move(es), std::move(ee), std::move(wt), num_nodes, seed, grid_rows, grid_cols,
                      feature_len);
}

std::string_view pattern_name(PatternKind k) {
  switch (k) {
    case PatternKind::Constant: return "constant";
    case PatternKind::Linear: return "linear";
    case PatternKind::Strided: return "strided";
    case PatternKind::RandomUniform: return "random-uniform";
    case PatternKind::IrregularStep: return "irregular-step";
    case PatternKind::Mixed: return "mixed";
  }
  return "?";
}

PatternKind parse_pattern(std::string_view s) {
  for (auto k : {PatternKind::Constant, PatternKind::Linear, PatternKind::Strided, PatternKind::RandomUniform,
                 PatternKind::IrregularStep, PatternKind::Mixed})
    if (pattern_name(k) == s) return k;
  if (s == "random") return PatternKind::RandomUniform;
  if (s == "irregular") return PatternKind::IrregularStep;
  throw ConfigError("unknown pattern '" + std::string(s) + "'");
}

std::uint32_t pattern_key(std::uint64_t seed) {
  return static_cast<std::uint32_t>(derive_seed(seed, kStreamPatternKey));
}

KernelProgram gen_pattern_kernel(const AccessPatternSpec& s, std::uint32_t length) {
  if (length == 0) throw ValidationError("pattern length must be positive");
  if (s.base % kWordBytes != 0) throw ValidationError("pattern base must be word aligned");
  KernelProgram k;
  k.name = "pattern-" + std::string(pattern_name(s.kind));
  k.grid_rows = 4;
  k.grid_cols = 4;
  k.trip_count = length;

  std::vector<PEConfig> ops;
  const std::uint32_t key = pattern_key(s.seed);
  Addr region_base = s.base;
  std::uint64_t region_bytes = s.range_bytes;

  if (s.kind == PatternKind::Linear) {
    if (s.stride % static_cast<std::int32_t>(kWordBytes) != 0) throw ValidationError("stride must be a multiple of 4");
    const std::int64_t first = s.base;
    const std::int64_t last = first + std::int64_t{s.stride} * (std::int64_t{length} - 1);
    if (last < 0 || last + kWordBytes > 0xFFFFFFF0LL) throw ValidationError("stride causes address overflow");
    const std::int64_t lo = std::min(first, last), hi = std::max(first, last) + kWordBytes;
    if (hi - lo > (std::int64_t{1} << 26)) throw ValidationError("linear pattern span too large");
    region_base = static_cast<Addr>(lo);
    region_bytes = static_cast<std::uint64_t>(hi - lo);
  } else {
    if (!is_pow2(s.range_bytes) || s.range_bytes < kWordBytes || s.range_bytes > (1u << 26))
      throw ValidationError("pattern range must be a power of two between 4 B and 64 MB");
    if (std::uint64_t{s.base} + s.range_bytes > 0xFFFFFFF0ULL) throw ValidationError("pattern range overflows");
  }
  Region& data = add_region(k, "data", static_cast<std::uint32_t>(region_bytes / kWordBytes), 0, false, region_base);
  fill_random(data, derive_seed(s.seed, kStreamPatternData));
  const Addr B = s.base;
  const Word mask = s.range_bytes - 1;

  switch (s.kind) {
    case PatternKind::Constant:
      ops.push_back(op(Opcode::LOAD, Operand::none(), Operand::none(), D(2), B));
      break;
    case PatternKind::Linear:
      ops.push_back(op(Opcode::LOAD, R(4), Operand::none(), D(2), B));
      ops.push_back(op(Opcode::ADD, R(4), I(static_cast<Word>(s.stride)), D(4)));
      break;
    case PatternKind::Strided:
      if (!is_pow2(s.run)) throw ValidationError("stair run must be a power of two");
      ops.push_back(op(Opcode::LSHR, R(0), I(log2_exact(s.run)), D(1)));
      ops.push_back(op(Opcode::MUL, R(1), I(s.step), D(1)));
      ops.push_back(op(Opcode::AND, R(1), I(mask & ~3u), D(1)));
      ops.push_back(op(Opcode::LOAD, R(1), Operand::none(), D(2), B));
      break;
    case PatternKind::RandomUniform:
      emit_random_offset(ops, key, s.range_bytes / kWordBytes);
      ops.push_back(op(Opcode::LOAD, R(1), Operand::none(), D(2), B));
      break;
    case PatternKind::IrregularStep:
      if (!is_pow2(s.max_step)) throw ValidationError("max step must be a power of two");
      emit_hash(ops, 0, key, 1, 2);
      ops.push_back(op(Opcode::AND, R(1), I(s.max_step - 1), D(1)));
      ops.push_back(op(Opcode::ADD, R(1), I(1), D(1)));
      ops.push_back(op(Opcode::SHL, R(1), I(2), D(1)));
      ops.push_back(op(Opcode::ADD, R(4), R(1), D(4)));
      ops.push_back(op(Opcode::AND, R(4), I(mask), D(4)));
      ops.push_back(op(Opcode::LOAD, R(4), Operand::none(), D(2), B));
      break;
    case PatternKind::Mixed:
      // even k: linear word walk; odd k: random word; chosen with SELECT.
      ops.push_back(op(Opcode::LSHR, R(0), I(1), D(1)));
      ops.push_back(op(Opcode::SHL, R(1), I(2), D(1)));
      ops.push_back(op(Opcode::AND, R(1), I(mask), D(1)));
      emit_hash(ops, 0, key, 5, 6);
      ops.push_back(op(Opcode::AND, R(5), I(s.range_bytes / kWordBytes - 1), D(5)));
      ops.push_back(op(Opcode::SHL, R(5), I(2), D(5)));
      ops.push_back(op(Opcode::AND, R(0), I(1), D(6)));
      ops.push_back(op(Opcode::SELECT, R(6), R(5), D(1), 0, R(1)));
      ops.push_back(op(Opcode::LOAD, R(1), Operand::none(), D(2), B));
      break;
  }
  Region& acc = add_region(k, "acc", 1, 0, true);
  emit_fold(ops, acc.base);
  k.initiation_interval = static_cast<std::uint32_t>(ops.size());
  place(k, 0, ops);
  k.validate();
  return k;
}

KernelProgram gen_radix_hist_kernel(std::uint32_t num_keys, std::uint32_t buckets, std::uint32_t shift,
                                    std::uint64_t seed) {
  if (num_keys == 0) throw ValidationError("radix kernel needs keys");
  if (!is_pow2(buckets)) throw ValidationError("bucket count must be a power of two");
  KernelProgram k;
  k.name = "radix-hist";
  k.grid_rows = 4;
  k.grid_cols = 4;
  k.trip_count = num_keys;
  fill_random(add_region(k, "keys", num_keys, 0, false), derive_seed(seed, kStreamKeys));
  const Addr KEYS = k.regions[0].base;
  const Addr HIST = add_region(k, "hist", buckets, 0, false).base;
  std::vector<PEConfig> ops;
  ops.push_back(op(Opcode::LOAD, R(0), Operand::none(), D(1), KEYS));
  ops.push_back(op(Opcode::LSHR, R(1), I(shift & 31u), D(1)));
  ops.push_back(op(Opcode::AND, R(1), I(buckets - 1), D(1)));
  ops.push_back(op(Opcode::SHL, R(1), I(2), D(1)));
  ops.push_back(op(Opcode::LOAD, R(1), Operand::none(), D(2), HIST));
  ops.push_back(op(Opcode::ADD, R(2), I(1), D(2)));
  ops.push_back(op(Opcode::STORE, R(1), R(2), Dest::none(), HIST));
  ops.push_back(op(Opcode::ADD, R(0), I(4), D(0)));
  k.initiation_interval = static_cast<std::uint32_t>(ops.size());
  place(k, 0, ops);
  k.validate();
  return k;
}

KernelProgram gen_mix_kernel(std::uint32_t length, std::uint32_t random_bytes, std::uint64_t seed) {
  if (length == 0) throw ValidationError("mix length must be positive");
  if (!is_pow2(random_bytes) || random_bytes < 64) throw ValidationError("random footprint must be a power of two >= 64");
  KernelProgram k;
  k.name = "mix";
  k.grid_rows = 4;
  k.grid_cols = 4;
  k.trip_count = length;
  fill_random(add_region(k, "linear", length, 0, false), derive_seed(seed, kStreamMix));
  fill_random(add_region(k, "random", random_bytes / kWordBytes, 1, false), derive_seed(seed, kStreamMix + 100));
  const Addr LIN = k.regions[0].base, RND = k.regions[1].base;
  const Addr ACC0 = add_region(k, "acc0", 1, 0, true).base;
  const Addr ACC1 = add_region(k, "acc1", 1, 1, true).base;
  const Addr ACC2 = add_region(k, "acc2", 1, 1, true).base;

  // Two independent random streams share the second partition.
  auto random_stream = [&](std::uint32_t key, Addr acc) {
    std::vector<PEConfig> ops;
    emit_random_offset(ops, key, random_bytes / kWordBytes);
    ops.push_back(op(Opcode::LOAD, R(1), Operand::none(), D(2), RND));
    emit_fold(ops, acc);
    return ops;
  };
  const auto rnd2 = random_stream(pattern_key(seed), ACC1);
  const auto rnd3 = random_stream(pattern_key(derive_seed(seed, kStreamMix + 1)), ACC2);

  std::vector<PEConfig> lin;
  lin.push_back(op(Opcode::LOAD, R(4), Operand::none(), D(2), LIN));
  lin.push_back(op(Opcode::ADD, R(4), I(4), D(4)));
  emit_fold(lin, ACC0);
  // Line the loads up in the same context.
  const std::size_t load_ctx = rnd2.size() - 5;
  std::vector<PEConfig> padded(load_ctx, PEConfig{});
  padded.insert(padded.end(), lin.begin(), lin.end());

  k.initiation_interval = static_cast<std::uint32_t>(std::max(rnd2.size(), padded.size()));
  place(k, 0, padded);
  place(k, 2, rnd2);
  place(k, 3, rnd3);
  k.validate();
  return k;
}

KernelProgram gen_quad_kernel(std::uint32_t length, std::uint32_t stream_bytes, std::uint64_t seed) {
  if (length == 0) throw ValidationError("quad length must be positive");
  if (!is_pow2(stream_bytes) || stream_bytes < 64) throw ValidationError("stream footprint must be a power of two >= 64");
  KernelProgram k;
  k.name = "quad";
  k.grid_rows = 4;
  k.grid_cols = 4;
  k.trip_count = length;
  for (std::uint32_t r = 0; r < 4; ++r)
    fill_random(add_region(k, "data" + std::to_string(r), stream_bytes / kWordBytes, r / 2, false),
                derive_seed(seed, kStreamQuad + 10 * r));
  for (std::uint32_t r = 0; r < 4; ++r) add_region(k, "acc" + std::to_string(r), 1, r / 2, true);
  for (std::uint32_t r = 0; r < 4; ++r) {
    std::vector<PEConfig> ops;
    emit_random_offset(ops, pattern_key(derive_seed(seed, kStreamQuad + 10 * r + 1)), stream_bytes / kWordBytes);
    ops.push_back(op(Opcode::LOAD, R(1), Operand::none(), D(2), k.regions[r].base));
    emit_fold(ops, k.regions[4 + r].base);
    k.initiation_interval = static_cast<std::uint32_t>(ops.size());
    place(k, r, ops);
  }
  k.validate();
  return k;
}

KernelProgram gen_conflict_kernel(std::uint32_t length, std::uint32_t blocks, std::uint32_t stride,
                                  std::uint64_t seed) {
  if (!is_pow2(blocks) || !is_pow2(stride)) throw ValidationError("conflict blocks and stride must be powers of two");
  AccessPatternSpec s;
  s.kind = PatternKind::Strided;
  s.run = 1;
  s.step = stride;
  s.range_bytes = blocks * stride;
  s.seed = seed;
  KernelProgram k = gen_pattern_kernel(s, length);
  k.name = "conflict";
  return k;
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"gather", "pattern", "radix-hist", "mix", "quad", "conflict"};
  return names;
}

KernelProgram make_builtin(std::string_view name, const BuiltinParams& p) {
  if (name == "gather") {
    if (p.edge_list.empty()) return gen_gather_kernel(p.edges, p.nodes, p.seed, 4, 4, p.feature_len);
    std::ifstream in(p.edge_list);
    if (!in) throw Error("cannot open edge list " + p.edge_list);
    std::stringstream ss;
    ss << in.rdbuf();
    auto edges = parse_edge_list(ss.str());
    std::uint32_t nodes = p.nodes;
    for (const auto& e : edges) nodes = std::max({nodes, e.src + 1, e.dst + 1});
    return gen_gather_from_edges(edges, nodes, p.seed, 4, 4, p.feature_len);
  }
  if (name == "pattern") {
    AccessPatternSpec s;
    s.kind = p.pattern;
    s.range_bytes = p.footprint;
    s.stride = p.stride;
    s.seed = p.seed;
    return gen_pattern_kernel(s, p.length);
  }
  if (name == "radix-hist") return gen_radix_hist_kernel(p.length, 256, 8, p.seed);
  if (name == "mix") return gen_mix_kernel(p.length, p.footprint, p.seed);
  if (name == "quad") return gen_quad_kernel(p.length, p.footprint, p.seed);
  if (name == "conflict") return gen_conflict_kernel(p.length, 8, 4096, p.seed);
  throw ConfigError("unknown builtin kernel '" + std::string(name) + "'");
}

}  // namespace cgra

#include "cgra/kernel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace cgra {

namespace {

constexpr std::array<std::string_view, 16> kOpNames = {
    "ADD", "SUB", "MUL", "AND", "OR", "XOR", "SHL", "LSHR",
    "ASHR", "CMP_LT", "SELECT", "CONST", "ROUTE", "LOAD", "STORE", "NOP"};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Accepts decimal, 0x-hex and negative decimal (wrapped to 32 bits).
std::optional<Word> parse_word(std::string_view s) {
  bool neg = false;
  if (!s.empty() && s.front() == '-') {
    neg = true;
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size() || v > 0xFFFFFFFFULL) return std::nullopt;
  auto w = static_cast<Word>(v);
  return neg ? static_cast<Word>(0u - w) : w;
}

Word need_word(std::string_view s, int line, const char* what) {
  auto v = parse_word(s);
  if (!v) throw ParseError(line, std::string("bad ") + what + " '" + std::string(s) + "'");
  return *v;
}

std::optional<unsigned> parse_reg(std::string_view s) {
  if (s.size() < 2 || s[0] != 'r') return std::nullopt;
  unsigned r = 0;
  auto [p, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), r);
  if (ec != std::errc{} || p != s.data() + s.size() || r >= kNumRegisters) return std::nullopt;
  return r;
}

Operand parse_operand(std::string_view s, int line) {
  if (s == "-") return Operand::none();
  if (s == "n") return Operand::north();
  if (s == "e") return Operand::east();
  if (s == "s") return Operand::south();
  if (s == "w") return Operand::west();
  if (s == "o") return Operand::out();
  if (auto r = parse_reg(s)) return Operand::reg(*r);
  if (!s.empty() && s[0] == '#') return Operand::imm(need_word(s.substr(1), line, "immediate"));
  throw ParseError(line, "bad operand '" + std::string(s) + "'");
}

Dest parse_dest(std::string_view s, int line) {
  if (s == "-") return Dest::none();
  if (s == "o") return Dest::out();
  if (auto r = parse_reg(s)) return Dest::to_reg(*r);
  throw ParseError(line, "bad destination '" + std::string(s) + "'");
}

std::string operand_text(const Operand& o) {
  switch (o.kind) {
    case Operand::Kind::None: return "-";
    case Operand::Kind::North: return "n";
    case Operand::Kind::East: return "e";
    case Operand::Kind::South: return "s";
    case Operand::Kind::West: return "w";
    case Operand::Kind::Out: return "o";
    case Operand::Kind::Reg: return "r" + std::to_string(o.value);
    case Operand::Kind::Imm: return "#" + std::to_string(o.value);
  }
  return "-";
}

std::string dest_text(const Dest& d) {
  switch (d.kind) {
    case Dest::Kind::None: return "-";
    case Dest::Kind::Out: return "o";
    case Dest::Kind::Reg: return "r" + std::to_string(d.reg);
  }
  return "-";
}

}  // namespace

std::string_view opcode_name(Opcode op) { return kOpNames[static_cast<std::size_t>(op)]; }

std::optional<Opcode> opcode_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i)
    if (kOpNames[i] == name) return static_cast<Opcode>(i);
  return std::nullopt;
}

bool is_memory_op(Opcode op) { return op == Opcode::LOAD || op == Opcode::STORE; }

const PEConfig* KernelProgram::config_at(std::uint32_t row, std::uint32_t col,
                                         std::uint32_t ctx) const {
  auto it = pe_configs.find(SlotKey{row, col, ctx});
  return it == pe_configs.end() ? nullptr : &it->second;
}

std::uint32_t KernelProgram::max_stage() const {
  std::uint32_t s = 0;
  for (const auto& [key, cfg] : pe_configs) s = std::max(s, cfg.stage);
  return s;
}

const Region* KernelProgram::find_region(std::string_view n) const {
  for (const auto& r : regions)
    if (r.name == n) return &r;
  return nullptr;
}

Region* KernelProgram::find_region(std::string_view n) {
  for (auto& r : regions)
    if (r.name == n) return &r;
  return nullptr;
}

const Region* KernelProgram::region_at(Addr a) const {
  for (const auto& r : regions)
    if (r.contains(a)) return &r;
  return nullptr;
}

void KernelProgram::validate() const {
  if (grid_rows == 0 || grid_cols == 0) throw ValidationError("grid dimensions must be positive");
  if (initiation_interval == 0) throw ValidationError("initiation interval must be positive");
  for (const auto& [key, cfg] : pe_configs) {
    if (key.row >= grid_rows || key.col >= grid_cols || key.ctx >= initiation_interval)
      throw ValidationError("pe (" + std::to_string(key.row) + "," + std::to_string(key.col) +
                            ") ctx " + std::to_string(key.ctx) + " outside grid or II");
    if (is_memory_op(cfg.op) && key.col != 0)
      throw ValidationError("placement: " + std::string(opcode_name(cfg.op)) + " at pe (" +
                            std::to_string(key.row) + "," + std::to_string(key.col) +
                            ") is not an edge PE");
    if (cfg.op == Opcode::LOAD && cfg.dest.kind == Dest::Kind::None)
      throw ValidationError("LOAD without destination");
  }
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    if (r.words == 0) throw ValidationError("region " + r.name + " is empty");
    if (r.base % kWordBytes != 0) throw ValidationError("region " + r.name + " is not word aligned");
    if (static_cast<std::uint64_t>(r.base) + std::uint64_t{r.words} * kWordBytes > 0x100000000ULL)
      throw ValidationError("region " + r.name + " exceeds the 32-bit address space");
    if (r.init.size() != r.words) throw ValidationError("region " + r.name + " image size mismatch");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = regions[j];
      if (o.name == r.name) throw ValidationError("duplicate region " + r.name);
      if (r.base < o.end() && o.base < r.end())
        throw ValidationError("regions " + o.name + " and " + r.name + " overlap");
    }
  }
}

KernelProgram parse_kernel(std::string_view text) {
  KernelProgram k;
  bool have_grid = false, have_ii = false;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      // '#' also prefixes immediates; only a leading '#' (after spaces) is a comment.
      auto first = line.find_first_not_of(" \t");
      if (first == hash) line = line.substr(0, hash);
    }
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    const auto& kw = tok[0];
    auto want = [&](std::size_t lo, std::size_t hi) {
      if (tok.size() < lo || tok.size() > hi)
        throw ParseError(lineno, "wrong field count for '" + std::string(kw) + "'");
    };
    if (kw == "kernel") {
      want(2, 2);
      k.name = std::string(tok[1]);
    } else if (kw == "grid") {
      want(3, 3);
      k.grid_rows = need_word(tok[1], lineno, "row count");
      k.grid_cols = need_word(tok[2], lineno, "column count");
      have_grid = true;
    } else if (kw == "ii") {
      want(2, 2);
      k.initiation_interval = need_word(tok[1], lineno, "II");
      have_ii = true;
    } else if (kw == "trip") {
      want(2, 2);
      k.trip_count = need_word(tok[1], lineno, "trip count");
    } else if (kw == "region") {
      want(4, 6);
      Region r;
      r.name = std::string(tok[1]);
      r.base = need_word(tok[2], lineno, "base");
      r.words = need_word(tok[3], lineno, "length");
      for (std::size_t i = 4; i < tok.size(); ++i) {
        if (tok[i] == "spm") {
          r.spm = true;
        } else if (tok[i].starts_with("vspm=")) {
          r.vspm = need_word(tok[i].substr(5), lineno, "vspm");
        } else {
          throw ParseError(lineno, "unknown region flag '" + std::string(tok[i]) + "'");
        }
      }
      if (k.find_region(r.name)) throw ParseError(lineno, "duplicate region " + r.name);
      if (r.words > (1u << 26)) throw ParseError(lineno, "region too large");
      r.init.assign(r.words, 0);
      k.regions.push_back(std::move(r));
    } else if (kw == "data") {
      want(4, 4);
      Region* r = k.find_region(tok[1]);
      if (!r) throw ParseError(lineno, "data for undeclared region '" + std::string(tok[1]) + "'");
      Word idx = need_word(tok[2], lineno, "index");
      if (idx >= r->words) throw ParseError(lineno, "data index out of range");
      r->init[idx] = need_word(tok[3], lineno, "value");
    } else if (kw == "pe") {
      want(10, 11);
      SlotKey key{need_word(tok[1], lineno, "row"), need_word(tok[2], lineno, "column"),
                  need_word(tok[3], lineno, "context")};
      PEConfig c;
      auto op = opcode_from_name(tok[4]);
      if (!op) throw ParseError(lineno, "unknown opcode '" + std::string(tok[4]) + "'");
      c.op = *op;
      c.src_a = parse_operand(tok[5], lineno);
      c.src_b = parse_operand(tok[6], lineno);
      c.src_c = parse_operand(tok[7], lineno);
      c.dest = parse_dest(tok[8], lineno);
      c.imm = need_word(tok[9], lineno, "immediate");
      if (tok.size() == 11) {
        if (!tok[10].starts_with("stage="))
          throw ParseError(lineno, "unexpected field '" + std::string(tok[10]) + "'");
        c.stage = need_word(tok[10].substr(6), lineno, "stage");
      }
      if (!k.pe_configs.emplace(key, c).second)
        throw ParseError(lineno, "duplicate configuration for pe slot");
    } else {
      throw ParseError(lineno, "unknown directive '" + std::string(kw) + "'");
    }
  }
  if (!have_grid || !have_ii)
    throw ParseError(0, "kernel needs grid and ii headers");
  k.validate();
  return k;
}

std::string emit_kernel(const KernelProgram& k) {
  std::ostringstream os;
  os << "kernel " << k.name << '\n';
  os << "grid " << k.grid_rows << ' ' << k.grid_cols << '\n';
  os << "ii " << k.initiation_interval << '\n';
  os << "trip " << k.trip_count << '\n';
  for (const auto& r : k.regions) {
    os << "region " << r.name << " 0x" << std::hex << r.base << std::dec << ' ' << r.words;
    if (r.spm) os << " spm";
    if (r.vspm != 0) os << " vspm=" << r.vspm;
    os << '\n';
  }
  for (const auto& r : k.regions)
    for (std::size_t i = 0; i < r.init.size(); ++i)
      if (r.init[i] != 0) os << "data " << r.name << ' ' << i << ' ' << r.init[i] << '\n';
  for (const auto& [key, c] : k.pe_configs) {
    os << "pe " << key.row << ' ' << key.col << ' ' << key.ctx << ' ' << opcode_name(c.op) << ' '
       << operand_text(c.src_a) << ' ' << operand_text(c.src_b) << ' ' << operand_text(c.src_c)
       << ' ' << dest_text(c.dest) << ' ' << c.imm;
    if (c.stage != 0) os << " stage=" << c.stage;
    os << '\n';
  }
  return os.str();
}

KernelProgram load_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open kernel file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kernel(ss.str());
}

std::vector<Edge> parse_edge_list(std::string_view text) {
  std::vector<Edge> edges;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 3) throw ParseError(lineno, "edge line needs 'src dst weight'");
    edges.push_back({need_word(tok[0], lineno, "source"), need_word(tok[1], lineno, "destination"),
                     need_word(tok[2], lineno, "weight")});
  }
  return edges;
}

std::uint64_t kernel_digest(const KernelProgram& k) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : emit_kernel(k)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cgra

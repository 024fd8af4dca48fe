#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "cgra/types.hpp"

namespace cgra {

enum class Opcode : std::uint8_t {
  ADD, SUB, MUL, AND, OR, XOR, SHL, LSHR, ASHR, CMP_LT, SELECT, CONST, ROUTE, LOAD, STORE, NOP
};

std::string_view opcode_name(Opcode op);
std::optional<Opcode> opcode_from_name(std::string_view name);
bool is_memory_op(Opcode op);

// Where an operand comes from: a neighbour's output latch, a local register,
// the PE's own output latch, or an immediate word.
struct Operand {
  enum class Kind : std::uint8_t { None, North, East, South, West, Reg, Out, Imm };
  Kind kind = Kind::None;
  Word value = 0;  // register index for Reg, literal for Imm

  static Operand none() { return {}; }
  static Operand north() { return {Kind::North, 0}; }
  static Operand east() { return {Kind::East, 0}; }
  static Operand south() { return {Kind::South, 0}; }
  static Operand west() { return {Kind::West, 0}; }
  static Operand out() { return {Kind::Out, 0}; }
  static Operand reg(unsigned r) { return {Kind::Reg, r}; }
  static Operand imm(Word v) { return {Kind::Imm, v}; }

  friend bool operator==(const Operand&, const Operand&) = default;
};

struct Dest {
  enum class Kind : std::uint8_t { None, Reg, Out };
  Kind kind = Kind::None;
  std::uint8_t reg = 0;

  static Dest none() { return {}; }
  static Dest out() { return {Kind::Out, 0}; }
  static Dest to_reg(unsigned r) { return {Kind::Reg, static_cast<std::uint8_t>(r)}; }

  friend bool operator==(const Dest&, const Dest&) = default;
};

// One configuration-memory entry. LOAD reads [src_a + imm]; STORE writes
// src_b to [src_a + imm]. `stage` is the modulo-schedule stage: the entry
// executes on kernel step n only when 0 <= n - stage < trip_count.
struct PEConfig {
  Opcode op = Opcode::NOP;
  Operand src_a, src_b, src_c;
  Dest dest;
  Word imm = 0;
  std::uint32_t stage = 0;

  friend bool operator==(const PEConfig&, const PEConfig&) = default;
};

struct SlotKey {
  std::uint32_t row = 0, col = 0, ctx = 0;
  friend auto operator<=>(const SlotKey&, const SlotKey&) = default;
};

// A named data region. `vspm` selects the virtual SPM (and hence L1) that
// owns the address range; `spm` asks for SPM residency.
struct Region {
  std::string name;
  Addr base = 0;
  std::uint32_t words = 0;
  bool spm = false;
  std::uint32_t vspm = 0;
  std::vector<Word> init;  // size == words

  Addr end() const { return base + words * kWordBytes; }
  bool contains(Addr a) const { return a >= base && a < end(); }
  friend bool operator==(const Region&, const Region&) = default;
};

inline constexpr unsigned kNumRegisters = 8;

struct KernelProgram {
  std::string name = "kernel";
  std::uint32_t grid_rows = 1;
  std::uint32_t grid_cols = 1;
  std::uint32_t initiation_interval = 1;
  std::uint32_t trip_count = 0;
  std::map<SlotKey, PEConfig> pe_configs;
  std::vector<Region> regions;

  const PEConfig* config_at(std::uint32_t row, std::uint32_t col, std::uint32_t ctx) const;
  std::uint32_t max_stage() const;
  const Region* find_region(std::string_view name) const;
  Region* find_region(std::string_view name);
  // Region containing byte address `a`, if any.
  const Region* region_at(Addr a) const;

  // Throws ValidationError when an invariant is broken.
  void validate() const;

  friend bool operator==(const KernelProgram&, const KernelProgram&) = default;
};

KernelProgram parse_kernel(std::string_view text);
std::string emit_kernel(const KernelProgram& k);
KernelProgram load_kernel_file(const std::string& path);

struct Edge {
  std::uint32_t src = 0, dst = 0;
  Word weight = 0;
};

// Lines of `src dst weight`; '#' starts a comment.
std::vector<Edge> parse_edge_list(std::string_view text);

// FNV-1a over the canonical kernel text; identifies a kernel + data image.
std::uint64_t kernel_digest(const KernelProgram& k);

}  // namespace cgra

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cgra/kernel.hpp"
#include "cgra/types.hpp"

namespace cgra {

enum class Mode : std::uint8_t { Normal, Runahead };

TaggedWord alu_exec(Opcode op, TaggedWord a, TaggedWord b, TaggedWord c);

struct MemoryRequest {
  enum class Kind : std::uint8_t { Load, Store };
  Kind kind = Kind::Load;
  TaggedWord addr;
  TaggedWord data;  // stores only
  std::uint32_t row = 0;
  Cycle issue_cycle = 0;
  std::uint64_t id = 0;
};

// What the memory side says about a load submitted this cycle.
struct LoadReply {
  enum class Status : std::uint8_t { Ready, Pending };
  Status status = Status::Ready;
  TaggedWord value;

  static LoadReply ready(TaggedWord v) { return {Status::Ready, v}; }
  static LoadReply pending() { return {Status::Pending, {}}; }
};

class MemoryPort {
 public:
  virtual ~MemoryPort() = default;
  // Requests arrive in ascending row order within a cycle. Stores return a
  // ready reply whose value is ignored.
  virtual LoadReply submit(const MemoryRequest& req) = 0;
};

struct PEState {
  std::array<TaggedWord, kNumRegisters> regs{};
  TaggedWord out;
  friend bool operator==(const PEState&, const PEState&) = default;
};

struct ArraySnapshot {
  std::vector<PEState> pes;
  std::uint32_t ctx = 0;
  std::uint64_t step = 0;
  friend bool operator==(const ArraySnapshot&, const ArraySnapshot&) = default;
};

struct TraceEvent {
  Cycle cycle = 0;
  std::uint32_t row = 0, col = 0;
  Opcode op = Opcode::NOP;
  Addr addr = 0;
  Mode mode = Mode::Normal;
};

// Register files, output latches and the shared context counter of the PE
// grid. Each call to step() is one unstalled cycle: every PE reads the
// start-of-cycle state, then all writes land together.
class PEArray {
 public:
  explicit PEArray(const KernelProgram& program);

  // Executes the current context. Returns the number of memory requests
  // submitted to `port`.
  std::size_t step(Cycle cycle, MemoryPort& port);

  // Fill for a pending load issued by step().
  void deliver(std::uint64_t request_id, TaggedWord value);

  bool has_pending() const { return !pending_.empty(); }
  std::vector<std::uint64_t> pending_ids() const;
  bool done() const { return live_.step >= total_steps_; }

  Mode mode() const { return mode_; }
  void save_state();
  void restore_state();
  // Marks the destinations of all pending loads dummy (runahead entry).
  void poison_pending();

  const ArraySnapshot& snapshot() const { return live_; }
  const PEState& pe(std::uint32_t row, std::uint32_t col) const {
    return live_.pes[row * cols_ + col];
  }
  std::uint32_t context() const { return live_.ctx; }
  std::uint64_t kernel_step() const { return live_.step; }
  std::uint64_t total_steps() const { return total_steps_; }
  bool any_dummy() const;

  void set_trace(std::function<void(const TraceEvent&)> hook) { trace_ = std::move(hook); }

 private:
  struct Target {
    std::uint32_t pe = 0;
    Dest dest;
  };

  TaggedWord read(const Operand& o, std::uint32_t r, std::uint32_t c) const;
  void write(std::uint32_t pe, const Dest& d, TaggedWord v);

  const KernelProgram& prog_;
  std::uint32_t rows_, cols_;
  std::uint64_t total_steps_;
  ArraySnapshot live_;
  std::optional<ArraySnapshot> shadow_;
  Mode mode_ = Mode::Normal;
  std::unordered_map<std::uint64_t, Target> pending_;
  std::uint64_t next_id_ = 1;
  std::function<void(const TraceEvent&)> trace_;
};

// Fraction of cycles in which the array did useful Normal-mode work.
double utilization(std::uint64_t active_cycles, std::uint64_t total_cycles);

}  // namespace cgra

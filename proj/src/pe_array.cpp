#include "cgra/pe_array.hpp"

#include <algorithm>

namespace cgra {

TaggedWord alu_exec(Opcode op, TaggedWord a, TaggedWord b, TaggedWord c) {
  const bool d2 = a.dummy || b.dummy;
  const Word x = a.value, y = b.value;
  switch (op) {
    case Opcode::ADD: return {x + y, d2};
    case Opcode::SUB: return {x - y, d2};
    case Opcode::MUL: return {x * y, d2};
    case Opcode::AND: return {x & y, d2};
    case Opcode::OR: return {x | y, d2};
    case Opcode::XOR: return {x ^ y, d2};
    case Opcode::SHL: return {x << (y & 31u), d2};
    case Opcode::LSHR: return {x >> (y & 31u), d2};
    case Opcode::ASHR:
      return {static_cast<Word>(static_cast<std::int32_t>(x) >> (y & 31u)), d2};
    case Opcode::CMP_LT:
      return {static_cast<std::int32_t>(x) < static_cast<std::int32_t>(y) ? 1u : 0u, d2};
    case Opcode::SELECT:
      // The condition counts as consumed: a dummy predicate makes the choice itself speculative.
      return {x != 0 ? y : c.value, a.dummy || b.dummy || c.dummy};
    case Opcode::CONST:
    case Opcode::ROUTE: return a;
    case Opcode::NOP: return {};
    case Opcode::LOAD:
    case Opcode::STORE: break;
  }
  throw SimulationError("alu_exec called with memory opcode " + std::string(opcode_name(op)));
}

PEArray::PEArray(const KernelProgram& program)
    : prog_(program),
      rows_(program.grid_rows),
      cols_(program.grid_cols),
      total_steps_(program.trip_count == 0
                       ? 0
                       : std::uint64_t{program.trip_count} + program.max_stage()) {
  live_.pes.assign(std::size_t{rows_} * cols_, PEState{});
}

TaggedWord PEArray::read(const Operand& o, std::uint32_t r, std::uint32_t c) const {
  auto latch = [&](std::int64_t rr, std::int64_t cc) -> TaggedWord {
    if (rr < 0 || cc < 0 || rr >= rows_ || cc >= cols_) return {};
    return live_.pes[static_cast<std::size_t>(rr) * cols_ + static_cast<std::size_t>(cc)].out;
  };
  switch (o.kind) {
    case Operand::Kind::None: return {};
    case Operand::Kind::North: return latch(std::int64_t{r} - 1, c);
    case Operand::Kind::South: return latch(std::int64_t{r} + 1, c);
    case Operand::Kind::East: return latch(r, std::int64_t{c} + 1);
    case Operand::Kind::West: return latch(r, std::int64_t{c} - 1);
    case Operand::Kind::Out: return live_.pes[r * cols_ + c].out;
    case Operand::Kind::Reg: return live_.pes[r * cols_ + c].regs[o.value];
    case Operand::Kind::Imm: return TaggedWord::clean(o.value);
  }
  return {};
}

void PEArray::write(std::uint32_t pe, const Dest& d, TaggedWord v) {
  auto& s = live_.pes[pe];
  if (d.kind == Dest::Kind::Out) s.out = v;
  else if (d.kind == Dest::Kind::Reg) s.regs[d.reg] = v;
}

std::size_t PEArray::step(Cycle cycle, MemoryPort& port) {
  if (done()) return 0;
  struct Write {
    std::uint32_t pe;
    Dest dest;
    TaggedWord value;
  };
  std::vector<Write> writes;
  std::size_t requests = 0;
  const std::uint32_t ctx = live_.ctx;
  const std::uint64_t n = live_.step;

  for (std::uint32_t r = 0; r < rows_; ++r) {
    for (std::uint32_t c = 0; c < cols_; ++c) {
      const PEConfig* cfg = prog_.config_at(r, c, ctx);
      if (!cfg || cfg->op == Opcode::NOP) continue;
      if (n < cfg->stage || n - cfg->stage >= prog_.trip_count) continue;
      const std::uint32_t pe = r * cols_ + c;
      if (cfg->op == Opcode::LOAD || cfg->op == Opcode::STORE) {
        const TaggedWord base = read(cfg->src_a, r, c);
        MemoryRequest req;
        req.kind = cfg->op == Opcode::LOAD ? MemoryRequest::Kind::Load : MemoryRequest::Kind::Store;
        req.addr = {base.value + cfg->imm, base.dummy};
        if (cfg->op == Opcode::STORE) req.data = read(cfg->src_b, r, c);
        req.row = r;
        req.issue_cycle = cycle;
        req.id = next_id_++;
        if (trace_) trace_({cycle, r, c, cfg->op, req.addr.value, mode_});
        ++requests;
        LoadReply reply = port.submit(req);
        if (req.kind == MemoryRequest::Kind::Load) {
          if (reply.status == LoadReply::Status::Ready) writes.push_back({pe, cfg->dest, reply.value});
          else pending_.emplace(req.id, Target{pe, cfg->dest});
        }
        continue;
      }
      TaggedWord v;
      if (cfg->op == Opcode::CONST) v = TaggedWord::clean(cfg->imm);
      else v = alu_exec(cfg->op, read(cfg->src_a, r, c), read(cfg->src_b, r, c), read(cfg->src_c, r, c));
      writes.push_back({pe, cfg->dest, v});
    }
  }
  for (const auto& w : writes) write(w.pe, w.dest, w.value);
  if (++live_.ctx == prog_.initiation_interval) {
    live_.ctx = 0;
    ++live_.step;
  }
  return requests;
}

void PEArray::deliver(std::uint64_t request_id, TaggedWord value) {
  auto it = pending_.find(request_id);
  if (it == pending_.end())
    throw SimulationError("fill for unknown request id " + std::to_string(request_id));
  write(it->second.pe, it->second.dest, value);
  pending_.erase(it);
}

std::vector<std::uint64_t> PEArray::pending_ids() const {
  std::vector<std::uint64_t> ids;
  ids.reserve(pending_.size());
  for (const auto& [id, t] : pending_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void PEArray::save_state() {
  if (mode_ != Mode::Normal) throw SimulationError("save_state outside Normal mode");
  shadow_ = live_;
  mode_ = Mode::Runahead;
}

void PEArray::restore_state() {
  if (mode_ != Mode::Runahead || !shadow_) throw SimulationError("restore_state outside Runahead mode");
  live_ = std::move(*shadow_);
  shadow_.reset();
  mode_ = Mode::Normal;
}

void PEArray::poison_pending() {
  for (const auto& [id, t] : pending_) write(t.pe, t.dest, TaggedWord::poison());
}

bool PEArray::any_dummy() const {
  for (const auto& s : live_.pes) {
    if (s.out.dummy) return true;
    for (const auto& r : s.regs)
      if (r.dummy) return true;
  }
  return false;
}

double utilization(std::uint64_t active_cycles, std::uint64_t total_cycles) {
  if (total_cycles == 0) return 0.0;
  return static_cast<double>(active_cycles) / static_cast<double>(total_cycles);
}

}  // namespace cgra

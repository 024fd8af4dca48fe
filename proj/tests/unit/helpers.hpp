#pragma once

#include <vector>

#include "cgra/simulator.hpp"

namespace testutil {

// Addresses of Normal-mode loads in issue order.
inline std::vector<cgra::Addr> load_trace(const cgra::KernelProgram& k, cgra::Variant v = cgra::Variant::Cache,
                                          const char* preset = "base") {
  cgra::SimOptions o;
  o.variant = v;
  o.hw = cgra::preset_config(preset);
  o.record_trace = true;
  auto res = cgra::simulate(k, o);
  std::vector<cgra::Addr> out;
  for (const auto& e : res.trace)
    if (e.op == cgra::Opcode::LOAD && e.mode == cgra::Mode::Normal) out.push_back(e.addr);
  return out;
}

inline cgra::SimResult run(const cgra::KernelProgram& k, cgra::Variant v, const char* preset = "base") {
  cgra::SimOptions o;
  o.variant = v;
  o.hw = cgra::preset_config(preset);
  return cgra::simulate(k, o);
}

}  // namespace testutil

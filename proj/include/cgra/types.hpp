#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cgra {

using Word = std::uint32_t;
using Addr = std::uint32_t;
using Cycle = std::uint64_t;

inline constexpr Addr kWordBytes = 4;

// A 32-bit datum plus the runahead "dummy" marker. The marker propagates
// through every operation that consumes the word.
struct TaggedWord {
  Word value = 0;
  bool dummy = false;

  friend bool operator==(const TaggedWord&, const TaggedWord&) = default;

  static TaggedWord clean(Word v) { return {v, false}; }
  static TaggedWord poison() { return {0, true}; }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed kernel, plan or config text. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Structurally valid input that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised while simulating: faults, deadlock guard, internal contract breaks.
class SimulationError : public Error {
 public:
  using Error::Error;
};

class CycleCapExceeded : public SimulationError {
 public:
  explicit CycleCapExceeded(Cycle cap)
      : SimulationError("cycle cap of " + std::to_string(cap) + " exceeded"), cap_(cap) {}
  Cycle cap() const { return cap_; }

 private:
  Cycle cap_;
};

constexpr bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr unsigned log2_exact(std::uint64_t v) {
  unsigned r = 0;
  while (v > 1) {
    v >>= 1;
    ++r;
  }
  return r;
}

}  // namespace cgra

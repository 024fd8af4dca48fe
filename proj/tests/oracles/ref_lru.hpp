#pragma once

// Straightforward set-associative LRU reference: each set is a recency list
// of block numbers, most recent first. Written independently of the
// simulator's way-pool implementation.

#include <algorithm>
#include <cstdint>
#include <list>
#include <vector>

namespace oracle {

class RefLru {
 public:
  RefLru(std::uint32_t sets, std::uint32_t ways, std::uint32_t line_bytes)
      : sets_(sets), ways_(ways), line_(line_bytes), lru_(sets) {}

  // Returns true on hit.
  bool access(std::uint32_t addr) {
    const std::uint64_t block = addr / line_;
    auto& s = lru_[block % sets_];
    auto it = std::find(s.begin(), s.end(), block);
    if (it != s.end()) {
      s.erase(it);
      s.push_front(block);
      return true;
    }
    if (ways_ == 0) return false;
    if (s.size() == ways_) s.pop_back();
    s.push_front(block);
    return false;
  }

 private:
  std::uint32_t sets_, ways_, line_;
  std::vector<std::list<std::uint64_t>> lru_;
};

}  // namespace oracle

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lnsim/crypto.hpp"

namespace lnsim {

// std::mt19937_64's output sequence is fixed by the standard, but the
// <random> distributions are not. Everything that must replay bit-for-bit
// across toolchains goes through these helpers instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [lo, hi], inclusive.
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi);
  Hash256 hash();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lnsim

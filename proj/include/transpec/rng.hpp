#pragma once

#include <cstdint>
#include <initializer_list>

namespace transpec {

/// splitmix64 finalizer; used to derive independent stream keys.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stream key for a position in a hierarchy of counters (seed, cell, run, ...).
[[nodiscard]] std::uint64_t stream_key(std::uint64_t seed,
                                       std::initializer_list<std::uint64_t> path) noexcept;

/// xoshiro256** generator with distribution helpers implemented in-house so
/// that draws do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t key) noexcept;
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
      : Rng(stream_key(seed, path)) {}

  std::uint64_t next() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) noexcept;
  /// Standard normal via the Marsaglia polar method.
  double normal() noexcept;

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace transpec

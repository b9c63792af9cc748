#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace sidforest {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Counter-based stream derivation: hashes (master, ids...) into an
/// independent 64-bit seed. Every random stream in the library is derived
/// this way so results never depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) noexcept;

/// Small wrapper over mt19937_64 with portable (library-independent)
/// conversions to doubles and bounded integers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (lo, hi); returns lo when lo >= hi.
  double uniform_open(double lo, double hi);

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sidforest

namespace sidforest {

/// Van der Corput radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, unsigned base) noexcept;

/// Coordinate `dim` of the `index`-th Halton point (first 32 prime bases,
/// then cycling with a scrambled index).
double halton(std::uint64_t index, std::size_t dim) noexcept;

}  // namespace sidforest

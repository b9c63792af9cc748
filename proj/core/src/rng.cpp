#include "sidforest/rng.hpp"

namespace sidforest {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t id : ids) {
    h = splitmix64(h ^ splitmix64(id + 0x632BE59BD9B4E019ULL));
  }
  return h;
}

double Rng::uniform_open(double lo, double hi) {
  if (!(lo < hi)) return lo;
  for (;;) {
    const double u = uniform01();
    const double c = lo + (hi - lo) * u;
    if (c > lo && c < hi) return c;
  }
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Reject the biased tail so the modulo is exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  for (;;) {
    const std::uint64_t v = engine_();
    if (v < limit) return v % n;
  }
}

}  // namespace sidforest

namespace sidforest {

double radical_inverse(std::uint64_t index, unsigned base) noexcept {
  const double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

double halton(std::uint64_t index, std::size_t dim) noexcept {
  static constexpr unsigned kPrimes[32] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,  31,  37,  41,  43,  47,  53,
                                           59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
  const unsigned base = kPrimes[dim % 32];
  const std::uint64_t shifted = dim < 32 ? index : index ^ (splitmix64(dim) & 0xFFFFF);
  return radical_inverse(shifted, base);
}

}  // namespace sidforest

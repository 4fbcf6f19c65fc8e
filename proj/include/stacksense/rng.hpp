#pragma once

#include <cstdint>
#include <random>

namespace stacksense {

// splitmix64 finalizer; used to derive independent sub-seeds from a counter.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                    std::uint64_t stream = 0) noexcept {
  return mix64(mix64(seed ^ mix64(stream)) ^ index);
}

// mt19937_64 with distribution code written out here, since the standard
// distributions are implementation-defined and would break cross-toolchain
// reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive on both ends.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo;
    if (span == UINT64_MAX) return engine_();
    const std::uint64_t n = span + 1;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return lo + r % n;
  }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = uniform_int(0, i - 1);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stacksense

#pragma once

#include <cstdint>

namespace tolalloc {

/// Counter-based uniform generator: the k-th draw of stream `seed` is
/// splitmix64(seed, k). Reproducible on every platform and independent of
/// draw order, so parallel producers can index draws directly.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits_at(std::uint64_t counter) const {
    return mix(key_ + mix(counter));
  }

  /// Uniform on [0, 1).
  double uniform_at(std::uint64_t counter) const {
    return static_cast<double>(bits_at(counter) >> 11) * 0x1.0p-53;
  }

  double uniform_at(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform_at(counter);
  }

  // Sequential interface on top of the counter.
  double uniform() { return uniform_at(counter_++); }
  double uniform(double lo, double hi) { return uniform_at(counter_++, lo, hi); }
  std::uint64_t next_bits() { return bits_at(counter_++); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tolalloc

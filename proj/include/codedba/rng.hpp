#pragma once

#include <cstdint>
#include <limits>

namespace codedba {

/// SplitMix64 generator. Streams are keyed by (seed, index) so that trial i
/// sees the same numbers whichever worker runs it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  static RngStream for_index(std::uint64_t seed, std::uint64_t index) {
    RngStream keyed(seed);
    const std::uint64_t a = keyed();
    RngStream mixer(a ^ (index * 0xD1B54A32D192ED03ull));
    return RngStream(mixer());
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace codedba

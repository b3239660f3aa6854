#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cilforge {

namespace detail {

inline constexpr std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace detail

// Splittable deterministic PRNG (splitmix64 core). A generator is identified
// by its seed; split() derives an independent child stream from the seed and
// a tag, independent of how much the parent has already been consumed. All
// arithmetic is plain u64, so sequences are identical across platforms.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0)
      : seed_(seed), state_(detail::splitmix_finalize(seed + 0x9E3779B97F4A7C15ull)) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return detail::splitmix_finalize(state_);
  }

  // Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; two uniforms per draw, no cached spare.
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

  Rng split(std::uint64_t stream) const {
    return Rng(detail::splitmix_finalize(seed_ ^ detail::splitmix_finalize(
                                                     stream + 0x9E3779B97F4A7C15ull)));
  }

  Rng split(std::string_view tag) const { return split(detail::fnv1a64(tag)); }

private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace cilforge

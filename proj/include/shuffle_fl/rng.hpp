#pragma once

#include <cstdint>
#include <cmath>

namespace shuffle_fl {

// SplitMix64 mixing function (Steele, Lea, Flood 2014). Used both as the
// finalizer for key derivation and as the core generator, so results are
// bit-identical across platforms and standard-library versions.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Small deterministic RNG. Each instance owns its stream; substreams are
// derived from (master seed, key_a, key_b) so trial/epoch/machine draws are
// independent of execution order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t master, std::uint64_t key_a, std::uint64_t key_b) {
    std::uint64_t s = splitmix64_mix(master + 0x9E3779B97F4A7C15ULL);
    s = splitmix64_mix(s ^ (key_a + 0xD1B54A32D192ED03ULL));
    s = splitmix64_mix(s ^ (key_b + 0x8CB92BA72F3D8DD7ULL));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64_mix(state_);
  }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (no cached spare, keeps the stream simple).
  double normal() {
    double u1 = unit();
    while (u1 == 0.0) u1 = unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace shuffle_fl

#ifndef INFOSPEC_RNG_HPP
#define INFOSPEC_RNG_HPP

#include <cstdint>

namespace infospec {

// SplitMix64 output for state value z. mix64(0) == 0xe220a8397b1dcdaf.
// This mix is part of the external random-binning contract (see codingsim):
// bin(x^n) = mix64(bin_seed ^ rank(x^n)) % bin_count.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based SplitMix64 stream. Streams derived from (seed, tag, index)
// give every sample/trial/codebook its own deterministic generator, so
// results do not depend on how work is split across workers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t s = mix64(seed);
    s = mix64(s ^ mix64(tag));
    s = mix64(s ^ mix64(index));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    std::uint64_t out = mix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return out;
  }

  // Uniform in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n), rejection sampled (unbiased).
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~std::uint64_t{0};
    std::uint64_t pow2 = n - 1;
    pow2 |= pow2 >> 1; pow2 |= pow2 >> 2; pow2 |= pow2 >> 4;
    pow2 |= pow2 >> 8; pow2 |= pow2 >> 16; pow2 |= pow2 >> 32;
    mask = pow2;
    for (;;) {
      std::uint64_t v = next_u64() & mask;
      if (v < n) return v;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace infospec

#endif  // INFOSPEC_RNG_HPP

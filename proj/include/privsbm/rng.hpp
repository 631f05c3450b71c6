#pragma once

#include <cmath>
#include <cstdint>

namespace privsbm {

// Deterministic stream generator: xoshiro256** seeded through splitmix64.
// Every stochastic operation in the library draws from one of these, so a
// (master seed, trial index) pair fully determines an experiment's bits on
// any platform.  No std::random_engine is used anywhere: their streams are
// implementation-defined and would break replay.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 as the seed expander, per Blackman/Vigna's recommendation.
    std::uint64_t x = seed;
    for (auto& word : s_) word = splitmix64(x);
  }

  // Substream for a numbered trial: hash the pair (master, index) so streams
  // for different trials never overlap in practice and never depend on the
  // order in which workers pick trials up.
  static Rng substream(std::uint64_t master, std::uint64_t index) {
    std::uint64_t x = master;
    std::uint64_t h = splitmix64(x);
    x = h ^ (index + 0x9e3779b97f4a7c15ULL);
    h ^= splitmix64(x);
    return Rng(h);
  }

  // Derived seed for the same pair, for recording in trial logs.
  static std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t x = master;
    std::uint64_t h = splitmix64(x);
    x = h ^ (index + 0x9e3779b97f4a7c15ULL);
    return h ^ splitmix64(x);
  }

  // xoshiro256** next().
  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in the open interval (0, 1): top 53 bits, offset by half
  // an ulp so 0 and 1 are unreachable and log(u) is always finite.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, bound) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Laplace(0, scale) by inverse CDF from a single uniform draw:
  //   u ~ U(0,1),  x = -scale * sgn(u - 1/2) * ln(1 - 2|u - 1/2|)
  // One draw per sample keeps the stream advancement rate fixed, which the
  // replay contract depends on.
  double laplace(double scale) {
    const double u = uniform01() - 0.5;
    const double sign = (u < 0.0) ? -1.0 : 1.0;
    return -scale * sign * std::log(1.0 - 2.0 * std::fabs(u));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

// Free-function form used by the mechanisms; rejects non-positive scales.
double laplace_sample(double scale, Rng& rng);

}  // namespace privsbm

#pragma once

#include <cmath>
#include <cstdint>

namespace misgen::num {

// Counter-based PRNG: SplitMix64 evaluated in counter mode.
// out(i) = mix13(key + (i+1)*GOLDEN), key = mix13(seed ^ mix13(stream ^ GOLDEN)).
// The full definition and test vectors live in docs/RNG.md; identical
// (seed, stream, counter) produces identical u64 output on every platform.
inline constexpr uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

constexpr uint64_t mix13(uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

constexpr uint64_t stream_key(uint64_t seed, uint64_t stream) {
  return mix13(seed ^ mix13(stream ^ kGoldenGamma));
}

// Fixed stream ids; sub-streams via substream().
enum : uint64_t {
  kStreamTrain = 0,      // action sampling during training rollouts
  kStreamEnvResets = 1,  // level seeds for vectorized-env auto-resets
  kStreamEval = 2,       // evaluation episodes (see substream scheme)
  kStreamShuffle = 3,    // minibatch permutation
  kStreamGen = 4,        // level generation (substream per retry attempt)
  kStreamInit = 5,       // network parameter initialization
  kStreamCoinBern = 6,   // per-level Bernoulli draw for coin randomization
};

constexpr uint64_t substream(uint64_t base, uint64_t i) {
  return (base << 32) ^ i;
}

class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(uint64_t seed, uint64_t stream, uint64_t counter = 0)
      : seed_(seed), stream_(stream), key_(stream_key(seed, stream)), counter_(counter) {}

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }
  uint64_t counter() const { return counter_; }
  void set_counter(uint64_t c) { counter_ = c; }

  // Random access without state mutation.
  uint64_t at(uint64_t i) const { return mix13(key_ + (i + 1) * kGoldenGamma); }

  uint64_t next_u64() { return at(counter_++); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; used where log(u) must stay finite.
  double uniform01_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Lemire multiply-shift; bias n/2^64 is
  // far below every statistical tolerance used here.
  uint64_t bounded(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller; consumes exactly two counter steps.
  double normal() {
    double u1 = uniform01_open();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  uint64_t seed_;
  uint64_t stream_;
  uint64_t key_;
  uint64_t counter_;
};

}  // namespace misgen::num

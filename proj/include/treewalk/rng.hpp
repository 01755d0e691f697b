// rng.hpp — deterministic counter-splittable random streams (splitmix64).
// Stream (seed, index) is a pure function of its arguments, so replicated
// work can run on any number of workers and still draw identical numbers.
#pragma once
#include "treewalk/topology.hpp"

namespace treewalk {

inline u64 mix64(u64 z) {
  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27; z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

struct rng_stream {
  u64 state;
  explicit rng_stream(u64 seed) : state(mix64(seed + 0x9E3779B97F4A7C15ull)) {}
  rng_stream(u64 seed, u64 stream_index)
      : state(mix64(mix64(seed + 0x9E3779B97F4A7C15ull) ^
                    mix64(~stream_index))) {}

  u64 next() {
    state += 0x9E3779B97F4A7C15ull;
    return mix64(state);
  }
  double uniform() { return (next() >> 11) * 0x1.0p-53; }   // [0, 1)
  double symmetric() { return 2 * uniform() - 1; }          // [-1, 1)
  u64 below(u64 bound) {                                    // unbiased
    __uint128_t m = (__uint128_t)next() * bound;
    u64 low = (u64)m;
    if (low < bound) {
      u64 threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = (__uint128_t)next() * bound;
        low = (u64)m;
      }
    }
    return (u64)(m >> 64);
  }
};

}  // namespace treewalk

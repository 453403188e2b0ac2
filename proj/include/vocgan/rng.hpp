#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace vocgan {

// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
// reproducible across platforms and the full state (4 words) can be stored in
// a training-state file and restored bit-exactly.
struct Rng {
  std::array<std::uint64_t, 4> state{};

  Rng() : Rng(0x9e3779b97f4a7c15ull) {}

  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state) s = splitmix64(x);
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t next_u64() {
    std::uint64_t result = rotl(state[0] + state[3], 23) + state[0];
    std::uint64_t t = state[1] << 17;
    state[2] ^= state[0];
    state[3] ^= state[1];
    state[1] ^= state[2];
    state[0] ^= state[3];
    state[2] ^= t;
    state[3] = rotl(state[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n); n > 0
  std::int64_t uniform_int(std::int64_t n) {
    return static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Box-Muller, one deviate per call (no cached spare, keeps state minimal).
  double normal() {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Independent substream for a named purpose (model init, sampling, ...).
  Rng fork(std::uint64_t stream) const {
    std::uint64_t x = state[0] ^ (stream * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
    Rng r(0);
    for (auto& s : r.state) s = splitmix64(x);
    return r;
  }
};

}  // namespace vocgan

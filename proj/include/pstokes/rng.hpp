#pragma once

#include <cmath>
#include <cstdint>

namespace pstokes {

// splitmix64 core with explicit Box-Muller; fully specified arithmetic so
// streams are reproducible across compilers and standard libraries.
struct Rng {
  std::uint64_t state;
  bool have_spare = false;
  double spare = 0.0;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // integer in [0, n)
  std::int64_t index(std::int64_t n) {
    return static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  double normal() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare = r * std::sin(a);
    have_spare = true;
    return r * std::cos(a);
  }

  // independent child stream, stable in (seed, tag)
  Rng child(std::uint64_t tag) const {
    Rng r(state ^ (0x632be59bd9b4e019ull * (tag + 1)));
    r.next_u64();
    return r;
  }
};

}  // namespace pstokes

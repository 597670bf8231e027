#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "smoothcal/numerics.hpp"

namespace smoothcal {

//! splitmix64 mixing step; whitens user-supplied seeds and derives
//! per-replication substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Deterministic random stream.
//!
//! The core engine is std::mt19937_64 (bit-exact across platforms by the
//! standard).  All variate transforms are hand-rolled here instead of using
//! std distributions, whose output is implementation-defined; identical
//! (seed, stream) pairs must produce identical output everywhere.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(derive(seed, stream)) {}

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) + 0x9e3779b97f4a7c15ULL * (stream + 1));
  }

  std::uint64_t next_u64() { return engine_(); }

  //! Uniform on [0,1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  //! Standard normal via Box-Muller (polar-free, two uniforms).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  //! +1 or -1 with equal probability.
  double rademacher() { return (engine_() >> 17 & 1ULL) ? 1.0 : -1.0; }

  //! Zero-mean uniform with standard deviation sigma.
  double centered_uniform(double sigma) {
    return sigma * std::sqrt(12.0) * (uniform01() - 0.5);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace smoothcal

#pragma once

// Reproducible random streams.
//
// Each (seed, point id, replicate) triple gets its own std::mt19937_64 engine
// seeded with
//
//   h = splitmix64(seed)
//   h = splitmix64(h ^ (point * 0x9E3779B97F4A7C15))
//   h = splitmix64(h ^ (replicate * 0xD1B54A32D192ED03))
//
// Uniforms take the top 53 bits of one engine draw, u = (k + 0.5) / 2^53, so
// they lie strictly inside (0, 1). Normals are the inverse normal CDF of one
// uniform (Wichura's AS 241). mt19937_64 output is fixed by the C++ standard,
// so streams are identical on every conforming platform.

#include <cstdint>
#include <random>

namespace mjpl {

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t point, std::uint64_t replicate);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t point, std::uint64_t replicate)
      : engine_(stream_seed(seed, point, replicate)) {}

  double uniform();
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mjpl

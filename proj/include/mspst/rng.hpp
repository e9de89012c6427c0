// mspst/rng.hpp

// Copyright 2026  The mspst authors

// See ../../LICENSE for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MSPST_RNG_HPP_
#define MSPST_RNG_HPP_

#include <cmath>
#include <cstdint>

#include "mspst/common.hpp"

namespace mspst {

/// Mixes a seed with a stream tag to derive an independent child seed.
/// Training code derives one stream per (phase, epoch, batch) so that
/// reordering work or adding consumers never perturbs unrelated draws.
inline uint64_t DeriveSeed(uint64_t seed, uint64_t tag) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Small deterministic generator (splitmix64 core).  It is fully defined by
/// this header — unlike std::mt19937 distributions, its output is identical
/// across standard libraries, which the byte-determinism guarantees rely on.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  /// Derives an independent generator; does not consume this one's state.
  Rng Stream(uint64_t tag) const { return Rng(DeriveSeed(state_, tag)); }

  uint64_t NextU64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  uint64_t UniformInt(uint64_t n) {
    Require(n > 0, "Rng::UniformInt: n must be positive");
    return static_cast<uint64_t>((static_cast<__uint128_t>(NextU64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller; one value per call (no cached spare,
  /// so the draw count is a pure function of the call count).
  double Normal() {
    double u1 = 1.0 - Uniform();  // (0, 1]: keeps log() finite
    double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  uint64_t state_;
};

}  // namespace mspst

#endif  // MSPST_RNG_HPP_

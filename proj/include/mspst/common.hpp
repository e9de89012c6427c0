// mspst/common.hpp

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

#ifndef MSPST_COMMON_HPP_
#define MSPST_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mspst {

/// Negative infinity, the additive identity of log-space accumulation.
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Throws std::invalid_argument when a caller-supplied precondition fails.
inline void Require(bool cond, const std::string &msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Throws std::runtime_error for internal-consistency failures.
inline void Check(bool cond, const std::string &msg) {
  if (!cond) throw std::runtime_error(msg);
}

/// log(exp(a) + exp(b)) with max-shift; handles -inf as the identity element.
inline double LogSumExp2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// log sum_i exp(v_i), computed by max-shift so that large magnitudes do not
/// overflow.  An all -inf input returns -inf.
inline double LogSumExp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v)
    if (x > m) m = x;
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

/// Round-trip-exact decimal rendering of a double ("%.17g").  Every metric
/// and serialized text number goes through this one function so reruns of
/// the same computation print byte-identical output.
inline std::string FormatDouble(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

/// 64-bit FNV-1a over a byte span; used for config fingerprints and for the
/// parameter-hashing freeze checks.
inline uint64_t Fnv1a64(const void *data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char *p = static_cast<const unsigned char *>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<uint64_t>(p[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// FNV-1a over the raw bytes of a vector of doubles.
inline uint64_t HashDoubles(const std::vector<double> &v, uint64_t h = 0xcbf29ce484222325ULL) {
  return Fnv1a64(v.data(), v.size() * sizeof(double), h);
}

}  // namespace mspst

#endif  // MSPST_COMMON_HPP_

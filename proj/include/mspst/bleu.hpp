// mspst/bleu.hpp

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

// Corpus-level BLEU over token-id sequences: geometric mean of clipped
// n-gram precisions (n = 1..max_n) times the brevity penalty.
//
//   BLEU = 100 * BP * exp( (1/N) * sum_n ln p_n )
//   BP   = 1                     if |hyp| >= |ref|   (corpus totals)
//        = exp(1 - |ref|/|hyp|)  otherwise
//
// Counts are pooled over the whole corpus before any ratio is taken, which
// is what makes the score invariant to sample order.  On desk-scale corpora
// zero n-gram matches are routine, so a zero count is smoothed to a fixed
// epsilon (1e-9) before the logarithm; an n whose hypotheses are all shorter
// than n contributes the same floor.  Detokenized-text scoring and toolchain
// parity with external scorers are out of scope: sequences here are token
// ids, and equality is id equality.

#ifndef MSPST_BLEU_HPP_
#define MSPST_BLEU_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "mspst/common.hpp"
#include "mspst/vocab.hpp"

namespace mspst {

/// Smoothing floor substituted for zero clipped-match counts.
inline constexpr double kBleuEpsilon = 1e-9;

namespace internal {

/// Multiset of the n-grams of `s` (empty when |s| < n).
inline std::map<TokenSeq, size_t> NgramCounts(const TokenSeq &s, size_t n) {
  std::map<TokenSeq, size_t> counts;
  if (s.size() < n) return counts;
  for (size_t i = 0; i + n <= s.size(); ++i) {
    TokenSeq gram(s.begin() + static_cast<std::ptrdiff_t>(i),
                  s.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[gram];
  }
  return counts;
}

}  // namespace internal

/// Corpus BLEU in [0, 100].  `hypotheses` and `references` are parallel;
/// every reference must be non-empty.  An entirely empty hypothesis corpus
/// scores 0.
inline double CorpusBleu(const std::vector<TokenSeq> &hypotheses,
                         const std::vector<TokenSeq> &references, size_t max_n = 4) {
  Require(max_n >= 1, "CorpusBleu: max_n must be at least 1");
  Require(hypotheses.size() == references.size(),
          "CorpusBleu: hypothesis/reference count mismatch");
  Require(!hypotheses.empty(), "CorpusBleu: empty corpus");
  for (const TokenSeq &r : references) Require(!r.empty(), "CorpusBleu: empty reference");

  size_t hyp_len = 0, ref_len = 0;
  std::vector<size_t> matches(max_n, 0), totals(max_n, 0);
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const TokenSeq &hyp = hypotheses[i];
    const TokenSeq &ref = references[i];
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (size_t n = 1; n <= max_n; ++n) {
      if (hyp.size() < n) continue;
      totals[n - 1] += hyp.size() - n + 1;
      std::map<TokenSeq, size_t> ref_counts = internal::NgramCounts(ref, n);
      for (const auto &kv : internal::NgramCounts(hyp, n)) {
        auto it = ref_counts.find(kv.first);
        if (it != ref_counts.end()) matches[n - 1] += std::min(kv.second, it->second);
      }
    }
  }
  if (hyp_len == 0) return 0.0;

  double log_p_sum = 0.0;
  for (size_t n = 0; n < max_n; ++n) {
    double num = matches[n] > 0 ? static_cast<double>(matches[n]) : kBleuEpsilon;
    double den = static_cast<double>(std::max<size_t>(totals[n], 1));
    log_p_sum += std::log(num / den);
  }
  double bp = hyp_len >= ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_p_sum / static_cast<double>(max_n));
}

}  // namespace mspst

#endif  // MSPST_BLEU_HPP_

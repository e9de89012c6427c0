// mspst/decode.hpp

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

#ifndef MSPST_DECODE_HPP_
#define MSPST_DECODE_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mspst/common.hpp"
#include "mspst/model.hpp"
#include "mspst/tensor.hpp"
#include "mspst/vocab.hpp"

namespace mspst {

/// Frame-wise argmax over CTC log-probabilities [T' x V].  Ties resolve to
/// the lowest token id (first maximum wins), keeping the decode a pure
/// function of the values.  With keep_blanks the raw argmax sequence is
/// returned (the knowledge-distillation teacher input); otherwise the
/// standard CTC collapse is applied: merge adjacent repeats, then remove
/// blanks.
inline TokenSeq CtcGreedyDecode(const Tensor &log_probs, bool keep_blanks, size_t blank_id) {
  Require(log_probs.Rank() == 2, "CtcGreedyDecode: log_probs must be [T x V]");
  size_t t_len = log_probs.Rows(), v = log_probs.Cols();
  Require(blank_id < v, "CtcGreedyDecode: blank_id out of vocabulary");
  TokenSeq raw(t_len);
  for (size_t t = 0; t < t_len; ++t) {
    size_t best = 0;
    for (size_t k = 1; k < v; ++k)
      if (log_probs(t, k) > log_probs(t, best)) best = k;
    raw[t] = best;
  }
  if (keep_blanks) return raw;
  TokenSeq out;
  for (size_t t = 0; t < t_len; ++t) {
    if (t > 0 && raw[t] == raw[t - 1]) continue;  // merge repeats first ...
    if (raw[t] == blank_id) continue;             // ... then drop blanks
    out.push_back(raw[t]);
  }
  return out;
}

/// Result of autoregressive decoding.  `tokens` is the generated sequence
/// without bos and without the terminating eos; `score` is the length
/// normalized log-probability sum(log p) / len^lp where len counts generated
/// tokens including eos; `reached_max_len` flags a hypothesis cut off before
/// emitting eos.  `cross_attn` optionally carries per-layer cross-attention
/// weights from a teacher-forced replay of the winning hypothesis.
struct DecodeResult {
  TokenSeq tokens;
  double score = 0.0;
  bool reached_max_len = false;
  std::vector<AttentionWeights> cross_attn;
};

/// Beam search over an abstract next-token distribution.  `step_fn` maps a
/// prefix (without bos) to log-probabilities over the vocabulary for the
/// next position.  Expansion candidates are ranked by accumulated
/// log-probability; ties break toward the lower token id and then the
/// earlier parent hypothesis, so the search is fully deterministic and
/// beam == 1 reproduces greedy decoding exactly.  Finished hypotheses
/// compete by length-normalized score.
inline DecodeResult BeamSearchCore(
    const std::function<std::vector<double>(const TokenSeq &)> &step_fn, size_t eos_id,
    size_t vocab_size, size_t beam, double length_penalty, size_t max_len) {
  Require(beam >= 1, "BeamSearchCore: beam must be >= 1");
  Require(max_len >= 1, "BeamSearchCore: max_len must be >= 1");
  Require(eos_id < vocab_size, "BeamSearchCore: eos_id out of vocabulary");

  struct Hyp {
    TokenSeq tokens;   // generated so far, eos excluded
    double sum_logp = 0.0;
    bool finished = false;
  };
  auto normalized = [&](const Hyp &h, bool with_eos) {
    double len = static_cast<double>(h.tokens.size() + (with_eos ? 1 : 0));
    len = std::max(len, 1.0);
    return h.sum_logp / std::pow(len, length_penalty);
  };

  std::vector<Hyp> alive(1);
  std::vector<Hyp> done;
  for (size_t step = 0; step < max_len && !alive.empty(); ++step) {
    struct Cand {
      double sum_logp;
      size_t parent, token;
    };
    std::vector<Cand> cands;
    for (size_t p = 0; p < alive.size(); ++p) {
      std::vector<double> logp = step_fn(alive[p].tokens);
      Require(logp.size() == vocab_size, "BeamSearchCore: step_fn vocabulary mismatch");
      for (size_t k = 0; k < vocab_size; ++k)
        cands.push_back(Cand{alive[p].sum_logp + logp[k], p, k});
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand &a, const Cand &b) {
      if (a.sum_logp != b.sum_logp) return a.sum_logp > b.sum_logp;
      if (a.token != b.token) return a.token < b.token;
      return a.parent < b.parent;
    });
    // Exactly the top `beam` candidates survive the step: a selected eos
    // finishes its hypothesis (the live beam shrinks), anything ranked
    // below the cut is discarded — so beam == 1 walks the argmax path and
    // stops exactly where greedy decoding stops.
    std::vector<Hyp> next;
    size_t taken = 0;
    for (const Cand &c : cands) {
      if (taken >= beam) break;
      ++taken;
      Hyp h = alive[c.parent];
      h.sum_logp = c.sum_logp;
      if (c.token == eos_id) {
        h.finished = true;
        // eos is counted in the normalization length but not emitted.
        done.push_back(std::move(h));
      } else {
        h.tokens.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }

  DecodeResult result;
  const Hyp *best = nullptr;
  bool best_truncated = false;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const Hyp &h : done) {
    double s = normalized(h, /*with_eos=*/true);
    if (best == nullptr || s > best_score) {
      best = &h;
      best_score = s;
      best_truncated = false;
    }
  }
  if (best == nullptr) {
    // No hypothesis emitted eos within max_len: fall back to the best
    // partial hypothesis and flag the truncation.
    for (const Hyp &h : alive) {
      double s = normalized(h, /*with_eos=*/false);
      if (best == nullptr || s > best_score) {
        best = &h;
        best_score = s;
        best_truncated = true;
      }
    }
  }
  Check(best != nullptr, "BeamSearchCore: no hypothesis produced");
  result.tokens = best->tokens;
  result.score = best_score;
  result.reached_max_len = best_truncated;
  return result;
}

/// End-to-end translation decode: encodes speech through the frozen model
/// (speech encoder, alignment adapter, textual adapter) and beam-searches
/// the decoder.  Gradients are disabled throughout.  If capture_cross_attn
/// is set, the winning hypothesis is replayed once under teacher forcing to
/// extract per-layer cross-attention weights.
inline DecodeResult BeamSearch(const ModelAssembly &assembly, const SpeechSeq &s, size_t beam,
                               double length_penalty, size_t max_len,
                               bool capture_cross_attn = false) {
  NoGradGuard no_grad;
  Rng rng(0);  // eval mode draws nothing
  Tensor memory = assembly.StEncode(s, /*train=*/false, rng);
  const SharedVocab &vocab = assembly.vocab;

  auto step_fn = [&](const TokenSeq &prefix) {
    TokenSeq in;
    in.reserve(prefix.size() + 1);
    in.push_back(vocab.bos_id);
    in.insert(in.end(), prefix.begin(), prefix.end());
    Tensor logits = assembly.DecoderForward(memory, in, /*train=*/false, rng);
    Tensor logp = LogSoftmaxRows(logits);
    size_t last = logp.Rows() - 1;
    std::vector<double> out(logp.Cols());
    for (size_t k = 0; k < out.size(); ++k) out[k] = logp(last, k);
    return out;
  };
  DecodeResult result =
      BeamSearchCore(step_fn, vocab.eos_id, vocab.size, beam, length_penalty, max_len);

  if (capture_cross_attn) {
    TokenSeq in;
    in.push_back(vocab.bos_id);
    in.insert(in.end(), result.tokens.begin(), result.tokens.end());
    assembly.DecoderForward(memory, in, /*train=*/false, rng, &result.cross_attn);
  }
  return result;
}

/// Greedy decoding is beam search with beam == 1; kept as a named entry
/// point for the decoder-output contract and the equivalence tests.
inline DecodeResult GreedyDecode(const ModelAssembly &assembly, const SpeechSeq &s,
                                 double length_penalty, size_t max_len) {
  return BeamSearch(assembly, s, /*beam=*/1, length_penalty, max_len);
}

}  // namespace mspst

#endif  // MSPST_DECODE_HPP_

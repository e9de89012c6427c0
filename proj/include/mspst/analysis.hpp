// mspst/analysis.hpp

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

// Analysis probes for a trained assembly:
//
//  * attention entropy — the mean Shannon entropy (natural log) of attention
//    rows, a diffuseness measure: uniform rows score ln(keys), one-hot rows
//    score 0.  Reported for the textual adapter's self-attention and for the
//    decoder's cross-attention during decoding.
//  * cross-modal / cross-lingual similarity — frames are assigned to tokens
//    by per-frame CTC argmax labeling of the alignment-adapter output; each
//    probe token's assigned frames are mean-pooled and compared (cosine)
//    against its own embedding row (cross-modal) and against the embedding
//    row of its mapped target token (cross-lingual).  A probe with no
//    assigned frames is reported absent, never as similarity zero.
//  * blank ratio — the fraction of frames the CTC argmax labels as blank, a
//    per-sample proxy for how silence-heavy the transcription-like decode
//    is; the robustness analysis splits test sets on it.
//
// Everything here is read-only over the parameters and runs in eval mode;
// the attention probes report per-head means (per-head values are available
// from AttentionWeights directly, and which head to plot is left to the
// caller).

#ifndef MSPST_ANALYSIS_HPP_
#define MSPST_ANALYSIS_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mspst/common.hpp"
#include "mspst/data.hpp"
#include "mspst/decode.hpp"
#include "mspst/model.hpp"
#include "mspst/nn.hpp"
#include "mspst/rng.hpp"
#include "mspst/tensor.hpp"
#include "mspst/vocab.hpp"

namespace mspst {

/// Mean Shannon entropy of the attention rows, in nats: the average over all
/// heads and query positions of -sum_k w ln w.  Rows are distributions over
/// the keys (this codebase attends over full, unpadded sequences), so the
/// value lies in [0, ln k_len].
inline double AttentionEntropy(const AttentionWeights &w) {
  Require(w.heads >= 1 && w.q_len >= 1 && w.k_len >= 1, "AttentionEntropy: empty weights");
  double sum = 0.0;
  for (size_t h = 0; h < w.heads; ++h) {
    for (size_t q = 0; q < w.q_len; ++q) {
      double row = 0.0;
      for (size_t k = 0; k < w.k_len; ++k) {
        double p = w.At(h, q, k);
        if (p > 0.0) row -= p * std::log(p);
      }
      sum += row;
    }
  }
  return sum / static_cast<double>(w.heads * w.q_len);
}

/// Mean of AttentionEntropy over a stack of layers (e.g. per-layer decoder
/// cross-attention captured during decoding).
inline double MeanAttentionEntropy(const std::vector<AttentionWeights> &layers) {
  Require(!layers.empty(), "MeanAttentionEntropy: no layers");
  double sum = 0.0;
  for (const AttentionWeights &w : layers) sum += AttentionEntropy(w);
  return sum / static_cast<double>(layers.size());
}

/// One probed token's similarity row.  `present` is false when the CTC
/// argmax assigned the token no frames at all; the cosines are meaningful
/// only when it is true.
struct SimilarityProbe {
  size_t token = 0;
  bool present = false;
  double cross_modal = 0.0;    // cos(pooled assigned frames, embedding of token)
  double cross_lingual = 0.0;  // cos(pooled assigned frames, embedding of mapped token)
};

/// Everything the `analyze` command reports for one speech sample.
struct AnalysisReport {
  double self_attention_entropy = 0.0;   // textual adapter self-attention
  double cross_attention_entropy = 0.0;  // decoder cross-attention while decoding
  double blank_ratio = 0.0;              // blank frames / total frames in the CTC argmax
  std::vector<SimilarityProbe> probes;
};

namespace internal {

/// Plain-double cosine; a zero vector yields 0 rather than a division error.
inline double CosineOfVectors(const std::vector<double> &a, const std::vector<double> &b) {
  Require(a.size() == b.size(), "CosineOfVectors: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Probe similarities given an already-computed alignment output.
inline std::vector<SimilarityProbe> ProbeSimilarities(const ModelAssembly &assembly,
                                                      const Tensor &hidden,
                                                      const TokenSeq &frame_labels,
                                                      const TokenSeq &probe_tokens,
                                                      const TargetMapping &mapping) {
  const size_t d = assembly.config.layer.model_dim;
  const size_t frames = hidden.Rows();
  Require(frame_labels.size() == frames, "ProbeSimilarities: label/frame count mismatch");

  std::vector<SimilarityProbe> out;
  out.reserve(probe_tokens.size());
  for (size_t tok : probe_tokens) {
    Require(tok < assembly.vocab.size, "ProbeSimilarities: probe token out of vocabulary");
    SimilarityProbe probe;
    probe.token = tok;
    std::vector<double> pooled(d, 0.0);
    size_t assigned = 0;
    for (size_t f = 0; f < frames; ++f) {
      if (frame_labels[f] != tok) continue;
      for (size_t j = 0; j < d; ++j) pooled[j] += hidden.Data()[f * d + j];
      ++assigned;
    }
    if (assigned == 0) {
      out.push_back(probe);  // absent, not zero
      continue;
    }
    for (double &x : pooled) x /= static_cast<double>(assigned);

    const std::vector<double> &emb = assembly.shared_embedding.Data();
    std::vector<double> src_row(emb.begin() + static_cast<std::ptrdiff_t>(tok * d),
                                emb.begin() + static_cast<std::ptrdiff_t>((tok + 1) * d));
    size_t mapped = mapping.MapToken(tok);
    std::vector<double> tgt_row(emb.begin() + static_cast<std::ptrdiff_t>(mapped * d),
                                emb.begin() + static_cast<std::ptrdiff_t>((mapped + 1) * d));
    probe.present = true;
    probe.cross_modal = CosineOfVectors(pooled, src_row);
    probe.cross_lingual = CosineOfVectors(pooled, tgt_row);
    out.push_back(probe);
  }
  return out;
}

}  // namespace internal

/// Fraction of frames the per-frame CTC argmax labels as blank, the noise
/// proxy the robustness analysis splits test sets on.
inline double BlankRatio(const ModelAssembly &assembly, const SpeechSeq &s) {
  NoGradGuard ng;
  Rng rng(0);
  Tensor enc = assembly.SpeechEncoderForward(s, /*train=*/false, rng);
  AlignmentOutput align = assembly.AlignmentAdapterForward(enc, false, rng);
  TokenSeq labels = CtcGreedyDecode(align.ctc_log_probs, /*keep_blanks=*/true,
                                    assembly.vocab.blank_id);
  size_t blanks = 0;
  for (size_t tok : labels)
    if (tok == assembly.vocab.blank_id) ++blanks;
  return static_cast<double>(blanks) / static_cast<double>(labels.size());
}

/// Similarity probes for one speech sample: frames are labeled by per-frame
/// CTC argmax over the alignment-adapter output, each probe token's frames
/// are mean-pooled, and the pooled vector is compared against the source and
/// mapped-target embedding rows.  Probe tokens must be drawable sentence
/// tokens (the mapping rejects reserved symbols).
inline std::vector<SimilarityProbe> CrossmodalSimilarity(const ModelAssembly &assembly,
                                                         const SpeechSeq &s,
                                                         const TokenSeq &probe_tokens,
                                                         const TargetMapping &mapping) {
  NoGradGuard ng;
  Rng rng(0);  // eval mode draws nothing
  Tensor enc = assembly.SpeechEncoderForward(s, /*train=*/false, rng);
  AlignmentOutput align = assembly.AlignmentAdapterForward(enc, false, rng);
  TokenSeq labels = CtcGreedyDecode(align.ctc_log_probs, /*keep_blanks=*/true,
                                    assembly.vocab.blank_id);
  return internal::ProbeSimilarities(assembly, align.hidden, labels, probe_tokens, mapping);
}

/// The full per-sample analysis: adapter self-attention entropy, decoder
/// cross-attention entropy during a greedy decode, the CTC blank ratio, and
/// the similarity probes.
inline AnalysisReport AnalyzeSample(const ModelAssembly &assembly, const SpeechSeq &s,
                                    const TokenSeq &probe_tokens, const TargetMapping &mapping,
                                    size_t max_decode_len) {
  NoGradGuard ng;
  Rng rng(0);
  AnalysisReport report;

  Tensor enc = assembly.SpeechEncoderForward(s, /*train=*/false, rng);
  AlignmentOutput align = assembly.AlignmentAdapterForward(enc, false, rng);
  TokenSeq labels = CtcGreedyDecode(align.ctc_log_probs, /*keep_blanks=*/true,
                                    assembly.vocab.blank_id);
  size_t blanks = 0;
  for (size_t tok : labels)
    if (tok == assembly.vocab.blank_id) ++blanks;
  report.blank_ratio = static_cast<double>(blanks) / static_cast<double>(labels.size());

  AttentionWeights self_attn;
  assembly.TextualAdapterForward(align.hidden, false, rng, &self_attn);
  report.self_attention_entropy = AttentionEntropy(self_attn);

  DecodeResult dec = BeamSearch(assembly, s, /*beam=*/1, /*length_penalty=*/1.0, max_decode_len,
                                /*capture_cross_attn=*/true);
  report.cross_attention_entropy = MeanAttentionEntropy(dec.cross_attn);

  report.probes = internal::ProbeSimilarities(assembly, align.hidden, labels, probe_tokens,
                                              mapping);
  return report;
}

}  // namespace mspst

#endif  // MSPST_ANALYSIS_HPP_

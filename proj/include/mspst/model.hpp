// mspst/model.hpp

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

#ifndef MSPST_MODEL_HPP_
#define MSPST_MODEL_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "mspst/common.hpp"
#include "mspst/nn.hpp"
#include "mspst/rng.hpp"
#include "mspst/tensor.hpp"
#include "mspst/vocab.hpp"

namespace mspst {

// The assembly wires five blocks around one shared embedding matrix:
//
//   speech ──> speech encoder ──> alignment adapter ──> textual adapter ──┐
//                                   │ (hidden · E^T = CTC log-probs)     │ A(s)
//   tokens ──> text encoder  ── M(t)                                     ▼
//                │  (embeds via E)                                    decoder ──> logits (· E^T)
//                └────────────── memory for MT ──────────────────────────┘
//
// The text encoder bridges the first two training steps and is dropped in
// the third: the decoder accepts the textual adapter's A(s) and the text
// encoder's M(t) interchangeably because both live in the same D-dim space.

/// The three training steps, in their mandatory order.
enum class Phase : uint32_t { kMT = 1, kASR = 2, kST = 3 };

inline const char *PhaseName(Phase p) {
  switch (p) {
    case Phase::kMT: return "mt";
    case Phase::kASR: return "asr";
    case Phase::kST: return "st";
  }
  throw std::invalid_argument("PhaseName: unknown phase");
}

/// Desk-scale architecture knobs.  The stand-in "pre-trained" acoustic model
/// is randomly initialized and shallow; the pipeline structure, not its
/// weights, is the object under study.
struct ModelConfig {
  LayerConfig layer;                 // model_dim / heads / ffn_dim / dropout
  size_t feature_dim = 16;           // input speech feature width
  size_t speech_layers = 2;          // transformer depth of the speech encoder
  size_t text_layers = 2;            // transformer depth of the text encoder
  size_t decoder_layers = 2;         // transformer depth of the decoder
  size_t downsample_layers = 3;      // n stride-2 convs in the alignment adapter

  void Validate() const {
    layer.Validate();
    Require(feature_dim > 0, "ModelConfig: feature_dim must be positive");
  }
};

/// Per-block trainability flags for one optimizer phase (true = trainable).
/// Frozen blocks receive zero optimizer updates; their bytes are invariant
/// across the phase, which the pipeline verifies by hashing.
struct FreezeMask {
  bool speech_encoder = false;
  bool alignment_adapter = false;
  bool textual_adapter = false;
  bool text_encoder = false;
  bool decoder = false;
  bool shared_embedding = false;

  bool BlockTrainable(const std::string &param_name) const {
    if (param_name.rfind("speech_encoder.", 0) == 0) return speech_encoder;
    if (param_name.rfind("alignment_adapter.", 0) == 0) return alignment_adapter;
    if (param_name.rfind("textual_adapter.", 0) == 0) return textual_adapter;
    if (param_name.rfind("text_encoder.", 0) == 0) return text_encoder;
    if (param_name.rfind("decoder.", 0) == 0) return decoder;
    if (param_name == "shared_embedding") return shared_embedding;
    throw std::invalid_argument("FreezeMask: unknown parameter " + param_name);
  }
};

/// Phase-dependent freezing rules:
///  * MT trains the textual side only: text encoder, decoder, embedding.
///  * ASR trains the two adapters; the speech encoder joins once the warmup
///    freeze elapses; the text encoder is frozen throughout, and the shared
///    embedding freezes with it (the embedding anchors the representation
///    space the CTC projection aligns to — updating it would let the
///    "frozen" target space drift).
///  * ST trains the whole speech path plus decoder; the text encoder is
///    dropped — excluded from the graph and the optimizer set entirely.
inline FreezeMask FreezeForPhase(Phase phase, uint64_t step, uint64_t warmup_freeze_steps) {
  FreezeMask mask;
  switch (phase) {
    case Phase::kMT:
      mask.text_encoder = true;
      mask.decoder = true;
      mask.shared_embedding = true;
      return mask;
    case Phase::kASR:
      mask.alignment_adapter = true;
      mask.textual_adapter = true;
      mask.speech_encoder = step >= warmup_freeze_steps;
      return mask;
    case Phase::kST:
      mask.speech_encoder = true;
      mask.alignment_adapter = true;
      mask.textual_adapter = true;
      mask.decoder = true;
      mask.shared_embedding = true;
      return mask;
  }
  throw std::invalid_argument("FreezeForPhase: unknown phase");
}

/// Output pair of the alignment adapter: shortened hidden states and the
/// CTC log-probabilities they project to through the shared embedding.
struct AlignmentOutput {
  Tensor hidden;               // [T' x D]
  Tensor ctc_log_probs;        // [T' x V], rows of exp() sum to 1
  AttentionWeights self_attn;  // conformer self-attention (analysis probe)
};

/// The five trainable blocks plus the shared embedding matrix.
struct ModelAssembly {
  SharedVocab vocab;
  ModelConfig config;

  // One matrix, four roles: token embedding, text-encoder input embedding,
  // CTC output projection, decoder output projection.  Identity of storage
  // is the tying invariant (mutating it must move all four behaviors).
  Tensor shared_embedding;  // [V x D]

  Conv1d speech_frontend;              // feature_dim -> D, stride 1
  TransformerEncoder speech_encoder;   // the stand-in pre-trained acoustic model
  Conv1dDownsample align_convs;        // n stride-2 convs (8x compression at n=3)
  ConformerBlock align_conformer;      // filters the down-sampled output
  MultiHeadAttention textual_attn;     // the single self-attention layer
  LayerNorm textual_ln;
  TransformerEncoder text_encoder;
  TransformerDecoder decoder;

  ModelAssembly() = default;

  ModelAssembly(const SharedVocab &v, const ModelConfig &cfg, uint64_t seed)
      : vocab(v), config(cfg) {
    vocab.Validate();
    config.Validate();
    Rng rng(DeriveSeed(seed, 0xA55E317ULL));
    size_t d = config.layer.model_dim;
    std::vector<double> emb(vocab.size * d);
    double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double &x : emb) x = rng.Normal(0.0, scale);
    shared_embedding = Tensor::WithData({vocab.size, d}, std::move(emb), true);
    speech_frontend = Conv1d(config.feature_dim, d, /*k=*/3, /*s=*/1, /*p=*/1, rng);
    speech_encoder = TransformerEncoder(config.layer, config.speech_layers, rng);
    align_convs = Conv1dDownsample(d, config.downsample_layers, rng);
    align_conformer = ConformerBlock(config.layer, rng);
    textual_attn = MultiHeadAttention(config.layer, rng);
    textual_ln = LayerNorm(d);
    text_encoder = TransformerEncoder(config.layer, config.text_layers, rng);
    decoder = TransformerDecoder(config.layer, config.decoder_layers, rng);
  }

  size_t ModelDim() const { return config.layer.model_dim; }

  /// Acoustic frames -> hidden frames, length preserving (stride-1 same-pad
  /// front end, then transformer layers with sinusoidal positions).
  Tensor SpeechEncoderForward(const SpeechSeq &s, bool train, Rng &rng) const {
    Require(s.Frames() > 0, "SpeechEncoderForward: empty input");
    Require(s.dim == config.feature_dim, "SpeechEncoderForward: feature dim mismatch");
    Tensor x = Tensor::WithData({s.Frames(), s.dim}, s.data);
    Tensor h = Relu(speech_frontend.Forward(x));
    h = Add(h, SinusoidalPositions(h.Rows(), ModelDim()));
    return speech_encoder.Forward(h, train, rng);
  }

  /// Hidden frames -> (shortened hidden, CTC log-probs).  The projection to
  /// the vocabulary goes through shared_embedding^T, which is what forces
  /// the acoustic representation into the textual embedding space.
  AlignmentOutput AlignmentAdapterForward(const Tensor &frames, bool train, Rng &rng) const {
    AlignmentOutput out;
    Tensor h = align_convs.Forward(frames);
    h = Add(h, SinusoidalPositions(h.Rows(), ModelDim()));
    out.hidden = align_conformer.Forward(h, train, rng, &out.self_attn);
    out.ctc_log_probs = LogSoftmaxRows(MatMulNT(out.hidden, shared_embedding));
    return out;
  }

  /// Position embedding, one self-attention layer, residual + norm; the
  /// output is A(s), the text-encoder-like view of the speech input.
  Tensor TextualAdapterForward(const Tensor &hidden, bool train, Rng &rng,
                               AttentionWeights *weights_out = nullptr) const {
    Tensor p = Add(hidden, SinusoidalPositions(hidden.Rows(), ModelDim()));
    Tensor a = textual_attn.Forward(p, p, nullptr, train, rng, weights_out);
    return textual_ln.Forward(Add(p, Dropout(a, config.layer.dropout, train, rng)));
  }

  /// Token sequence -> M(t).  Blank ids are ordinary tokens here: the text
  /// encoder must accept the denoising symbol wherever it appears.
  Tensor TextEncoderForward(const TokenSeq &tokens, bool train, Rng &rng) const {
    Require(!tokens.empty(), "TextEncoderForward: empty input");
    Tensor e = GatherRows(shared_embedding, tokens);
    e = Scale(e, std::sqrt(static_cast<double>(ModelDim())));
    e = Add(e, SinusoidalPositions(tokens.size(), ModelDim()));
    return text_encoder.Forward(e, train, rng);
  }

  /// Teacher-forced decoder logits over V for each prefix position.  The
  /// memory may come from the text encoder (MT) or the textual adapter
  /// (ST) — same interface, same D.
  Tensor DecoderForward(const Tensor &memory, const TokenSeq &y_prefix, bool train, Rng &rng,
                        std::vector<AttentionWeights> *cross_weights_out = nullptr) const {
    Require(!y_prefix.empty(), "DecoderForward: empty prefix");
    Require(y_prefix.front() == vocab.bos_id, "DecoderForward: prefix must start with bos");
    Tensor e = GatherRows(shared_embedding, y_prefix);
    e = Scale(e, std::sqrt(static_cast<double>(ModelDim())));
    e = Add(e, SinusoidalPositions(y_prefix.size(), ModelDim()));
    Tensor h = decoder.Forward(e, memory, train, rng, cross_weights_out);
    return MatMulNT(h, shared_embedding);
  }

  /// The ST encoder path: speech encoder -> alignment adapter -> textual
  /// adapter.  Returns A(s), [T' x D].
  Tensor StEncode(const SpeechSeq &s, bool train, Rng &rng) const {
    Tensor frames = SpeechEncoderForward(s, train, rng);
    AlignmentOutput align = AlignmentAdapterForward(frames, train, rng);
    return TextualAdapterForward(align.hidden, train, rng);
  }

  /// Every parameter under its canonical name.  std::map ordering makes the
  /// traversal (checkpoints, optimizer, hashing) deterministic by name.
  ParamMap NamedParams() const {
    ParamMap out;
    out["shared_embedding"] = shared_embedding;
    speech_frontend.AddParams("speech_encoder.frontend", &out);
    speech_encoder.AddParams("speech_encoder.stack", &out);
    align_convs.AddParams("alignment_adapter.convs", &out);
    align_conformer.AddParams("alignment_adapter.conformer", &out);
    textual_attn.AddParams("textual_adapter.attn", &out);
    textual_ln.AddParams("textual_adapter.ln", &out);
    text_encoder.AddParams("text_encoder.stack", &out);
    decoder.AddParams("decoder.stack", &out);
    return out;
  }

  /// FNV-1a over the named parameters of one block prefix, in name order.
  /// The freeze contract is checked by comparing these hashes across phases.
  uint64_t HashBlock(const std::string &prefix) const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto &kv : NamedParams()) {
      if (kv.first.rfind(prefix, 0) != 0) continue;
      h = Fnv1a64(kv.first.data(), kv.first.size(), h);
      h = HashDoubles(kv.second.Data(), h);
    }
    return h;
  }
};

}  // namespace mspst

#endif  // MSPST_MODEL_HPP_

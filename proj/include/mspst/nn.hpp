// mspst/nn.hpp

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

#ifndef MSPST_NN_HPP_
#define MSPST_NN_HPP_

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mspst/common.hpp"
#include "mspst/rng.hpp"
#include "mspst/tensor.hpp"

namespace mspst {

// Neural building blocks.  Conventions shared by every block:
//  * Forward(x, train, rng): `train` switches dropout on; `rng` supplies the
//    dropout masks and is only consumed in train mode, so evaluation is
//    deterministic and never advances a stream.
//  * Parameters are leaf Tensors created with requires_grad=true; blocks
//    expose them through AddParams(prefix, &map).  The map is a std::map so
//    iteration order — and with it checkpoint layout, optimizer order, and
//    hashing — is the lexicographic name order, never allocator-dependent.
//  * All layers are pre-norm residual; stacks finish with a LayerNorm.

/// Named parameter registry.  std::map keeps every traversal deterministic.
using ParamMap = std::map<std::string, Tensor>;

/// Width/head/FFN configuration of one layer.  The full-scale reference
/// setup uses 1024/16/4096; the desk-scale defaults shrink those by 16x
/// while preserving the 1:4 FFN ratio.
struct LayerConfig {
  size_t model_dim = 64;
  size_t heads = 4;
  size_t ffn_dim = 256;
  double dropout = 0.1;

  void Validate() const {
    Require(model_dim > 0 && heads > 0 && ffn_dim > 0, "LayerConfig: positive dims required");
    Require(model_dim % heads == 0, "LayerConfig: model_dim must be divisible by heads");
    Require(dropout >= 0.0 && dropout < 1.0, "LayerConfig: dropout must lie in [0,1)");
  }
};

/// Per-head attention matrices captured for the analysis probes; values are
/// the post-softmax weights (before attention dropout).
struct AttentionWeights {
  size_t heads = 0;
  size_t q_len = 0;
  size_t k_len = 0;
  std::vector<std::vector<double>> head_weights;  // heads x (q_len*k_len), row-major

  double At(size_t h, size_t q, size_t k) const { return head_weights[h][q * k_len + k]; }
};

/// Inverted dropout: keep with probability 1-p and rescale by 1/(1-p) so the
/// expectation is identity.  Eval mode (train=false) is exactly identity.
inline Tensor Dropout(const Tensor &x, double p, bool train, Rng &rng) {
  if (!train || p <= 0.0) return x;
  std::vector<double> mask(x.NumElements());
  double keep_scale = 1.0 / (1.0 - p);
  for (double &m : mask) m = rng.Bernoulli(p) ? 0.0 : keep_scale;
  return Mul(x, Tensor::WithData(x.Dims(), std::move(mask)));
}

/// Standard sin/cos absolute position table, T x D, D even.  Row 0 is the
/// alternating [0,1,0,1,...] pattern; every entry lies in [-1,1].
inline Tensor SinusoidalPositions(size_t t, size_t d) {
  Require(d % 2 == 0, "SinusoidalPositions: D must be even");
  std::vector<double> v(t * d);
  for (size_t pos = 0; pos < t; ++pos)
    for (size_t i = 0; i < d / 2; ++i) {
      double angle = static_cast<double>(pos) *
                     std::exp(-std::log(10000.0) * (2.0 * static_cast<double>(i)) /
                              static_cast<double>(d));
      v[pos * d + 2 * i] = std::sin(angle);
      v[pos * d + 2 * i + 1] = std::cos(angle);
    }
  return Tensor::WithData({t, d}, std::move(v));
}

/// Additive causal mask: 0 on and below the diagonal, -inf above.  -inf
/// scores underflow to exactly zero attention weight, which is what makes
/// the causality invariant bitwise rather than approximate.
inline Tensor CausalMask(size_t t) {
  std::vector<double> v(t * t, 0.0);
  for (size_t i = 0; i < t; ++i)
    for (size_t j = i + 1; j < t; ++j) v[i * t + j] = kNegInf;
  return Tensor::WithData({t, t}, std::move(v));
}

/// Affine map [N x in] -> [N x out]; weights Xavier-uniform, zero bias.
struct Linear {
  Tensor w;  // [in x out]
  Tensor b;  // [out]

  Linear() = default;
  Linear(size_t in, size_t out, Rng &rng) {
    double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<double> data(in * out);
    for (double &x : data) x = rng.Uniform(-a, a);
    w = Tensor::WithData({in, out}, std::move(data), /*requires_grad=*/true);
    b = Tensor::Zeros({out}, /*requires_grad=*/true);
  }

  Tensor Forward(const Tensor &x) const { return AddRowVector(MatMul(x, w), b); }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    (*out)[prefix + ".w"] = w;
    (*out)[prefix + ".b"] = b;
  }
};

/// Learned layer normalization (gain 1, bias 0 at init).
struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  explicit LayerNorm(size_t d) {
    gamma = Tensor::WithData({d}, std::vector<double>(d, 1.0), /*requires_grad=*/true);
    beta = Tensor::Zeros({d}, /*requires_grad=*/true);
  }

  Tensor Forward(const Tensor &x) const { return LayerNormOp(x, gamma, beta); }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    (*out)[prefix + ".gamma"] = gamma;
    (*out)[prefix + ".beta"] = beta;
  }
};

/// Scaled dot-product multi-head attention.  Returns the attended output and
/// optionally the per-head post-softmax weights for the analysis probes.
struct MultiHeadAttention {
  LayerConfig config;
  Linear wq, wk, wv, wo;

  MultiHeadAttention() = default;
  MultiHeadAttention(const LayerConfig &cfg, Rng &rng)
      : config(cfg),
        wq(cfg.model_dim, cfg.model_dim, rng),
        wk(cfg.model_dim, cfg.model_dim, rng),
        wv(cfg.model_dim, cfg.model_dim, rng),
        wo(cfg.model_dim, cfg.model_dim, rng) {
    config.Validate();
  }

  /// q_in: [Tq x D], kv_in: [Tk x D]; mask (optional): additive [Tq x Tk].
  Tensor Forward(const Tensor &q_in, const Tensor &kv_in, const Tensor *mask, bool train,
                 Rng &rng, AttentionWeights *weights_out = nullptr) const {
    Require(q_in.Rank() == 2 && q_in.Cols() == config.model_dim, "MultiHeadAttention: q shape");
    Require(kv_in.Rank() == 2 && kv_in.Cols() == config.model_dim, "MultiHeadAttention: kv shape");
    size_t dh = config.model_dim / config.heads;
    Tensor q = wq.Forward(q_in), k = wk.Forward(kv_in), v = wv.Forward(kv_in);
    if (weights_out != nullptr) {
      weights_out->heads = config.heads;
      weights_out->q_len = q_in.Rows();
      weights_out->k_len = kv_in.Rows();
      weights_out->head_weights.assign(config.heads, {});
    }
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(config.heads);
    for (size_t h = 0; h < config.heads; ++h) {
      Tensor qh = SliceCols(q, h * dh, (h + 1) * dh);
      Tensor kh = SliceCols(k, h * dh, (h + 1) * dh);
      Tensor vh = SliceCols(v, h * dh, (h + 1) * dh);
      Tensor scores = Scale(MatMulNT(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
      if (mask != nullptr) scores = Add(scores, *mask);
      Tensor weights = SoftmaxRows(scores);
      if (weights_out != nullptr) weights_out->head_weights[h] = weights.Data();
      weights = Dropout(weights, config.dropout, train, rng);
      head_outputs.push_back(MatMul(weights, vh));
    }
    return wo.Forward(ConcatCols(head_outputs));
  }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    wq.AddParams(prefix + ".wq", out);
    wk.AddParams(prefix + ".wk", out);
    wv.AddParams(prefix + ".wv", out);
    wo.AddParams(prefix + ".wo", out);
  }
};

/// Two-layer position-wise feed-forward with ReLU.
struct FeedForward {
  Linear lin1, lin2;
  double dropout = 0.0;

  FeedForward() = default;
  FeedForward(const LayerConfig &cfg, Rng &rng)
      : lin1(cfg.model_dim, cfg.ffn_dim, rng),
        lin2(cfg.ffn_dim, cfg.model_dim, rng),
        dropout(cfg.dropout) {}

  Tensor Forward(const Tensor &x, bool train, Rng &rng) const {
    return lin2.Forward(Dropout(Relu(lin1.Forward(x)), dropout, train, rng));
  }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    lin1.AddParams(prefix + ".lin1", out);
    lin2.AddParams(prefix + ".lin2", out);
  }
};

/// One strided 1-D convolution: unfold + affine projection.
struct Conv1d {
  size_t kernel = 3, stride = 1, pad = 1;
  Linear proj;  // [(kernel * in_channels) x out_channels]

  Conv1d() = default;
  Conv1d(size_t in_channels, size_t out_channels, size_t k, size_t s, size_t p, Rng &rng)
      : kernel(k), stride(s), pad(p), proj(k * in_channels, out_channels, rng) {}

  Tensor Forward(const Tensor &x) const { return proj.Forward(Unfold1d(x, kernel, stride, pad)); }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    proj.AddParams(prefix + ".proj", out);
  }
};

/// n stacked stride-2 convolutions (kernel 3, pad 1, ReLU between layers).
/// Each layer maps length T to ceil(T/2), so n layers compress by ~2^n —
/// with the default n=3, an input of 64 frames comes out as exactly 8.
struct Conv1dDownsample {
  std::vector<Conv1d> layers;

  Conv1dDownsample() = default;
  Conv1dDownsample(size_t channels, size_t num_layers, Rng &rng) {
    for (size_t i = 0; i < num_layers; ++i)
      layers.emplace_back(channels, channels, /*k=*/3, /*s=*/2, /*p=*/1, rng);
  }

  /// Output length after n halvings of an input of length t.
  static size_t OutputLength(size_t t, size_t num_layers) {
    for (size_t i = 0; i < num_layers; ++i) t = (t + 1) / 2;
    return t;
  }

  Tensor Forward(const Tensor &x) const {
    Require(x.Rank() == 2, "Conv1dDownsample: rank-2 input required");
    size_t min_len = size_t{1} << layers.size();
    Require(x.Rows() >= min_len,
            "Conv1dDownsample: input shorter than the receptive field (need >= 2^n frames)");
    Tensor h = x;
    for (const Conv1d &layer : layers) h = Relu(layer.Forward(h));
    return h;
  }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].AddParams(prefix + ".conv" + std::to_string(i), out);
  }
};

/// Convolution-augmented transformer block, lite variant: macaron
/// half-step FFNs, self-attention, and a depthwise-convolution sub-block
/// (pointwise expand, GLU gate, depthwise kernel 3, LayerNorm, swish,
/// pointwise project), closed by a final LayerNorm.  Absolute sinusoidal
/// positions are used by callers instead of relative encodings.
struct ConformerBlock {
  LayerConfig config;
  LayerNorm ln_ffn1, ln_attn, ln_conv, ln_dw, ln_ffn2, ln_final;
  FeedForward ffn1, ffn2;
  MultiHeadAttention attn;
  Linear pw1, pw2;  // pointwise D -> 2D (GLU input) and D -> D
  Tensor dw;        // depthwise kernel [3 x D]

  ConformerBlock() = default;
  ConformerBlock(const LayerConfig &cfg, Rng &rng)
      : config(cfg),
        ln_ffn1(cfg.model_dim),
        ln_attn(cfg.model_dim),
        ln_conv(cfg.model_dim),
        ln_dw(cfg.model_dim),
        ln_ffn2(cfg.model_dim),
        ln_final(cfg.model_dim),
        ffn1(cfg, rng),
        ffn2(cfg, rng),
        attn(cfg, rng),
        pw1(cfg.model_dim, 2 * cfg.model_dim, rng),
        pw2(cfg.model_dim, cfg.model_dim, rng) {
    size_t k = 3, d = cfg.model_dim;
    double a = std::sqrt(3.0 / static_cast<double>(k));
    std::vector<double> data(k * d);
    for (double &x : data) x = rng.Uniform(-a, a);
    dw = Tensor::WithData({k, d}, std::move(data), /*requires_grad=*/true);
  }

  Tensor Forward(const Tensor &x, bool train, Rng &rng,
                 AttentionWeights *weights_out = nullptr) const {
    double p = config.dropout;
    Tensor h = Add(x, Scale(Dropout(ffn1.Forward(ln_ffn1.Forward(x), train, rng), p, train, rng),
                            0.5));
    Tensor attn_in = ln_attn.Forward(h);
    h = Add(h, Dropout(attn.Forward(attn_in, attn_in, nullptr, train, rng, weights_out), p,
                       train, rng));
    // Convolution sub-block.
    Tensor c = ln_conv.Forward(h);
    Tensor gates = pw1.Forward(c);
    size_t d = config.model_dim;
    Tensor glu = Mul(SliceCols(gates, 0, d), Sigmoid(SliceCols(gates, d, 2 * d)));
    Tensor conv = Silu(ln_dw.Forward(DepthwiseConv1d(glu, dw)));
    h = Add(h, Dropout(pw2.Forward(conv), p, train, rng));
    h = Add(h, Scale(Dropout(ffn2.Forward(ln_ffn2.Forward(h), train, rng), p, train, rng), 0.5));
    return ln_final.Forward(h);
  }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    ln_ffn1.AddParams(prefix + ".ln_ffn1", out);
    ln_attn.AddParams(prefix + ".ln_attn", out);
    ln_conv.AddParams(prefix + ".ln_conv", out);
    ln_dw.AddParams(prefix + ".ln_dw", out);
    ln_ffn2.AddParams(prefix + ".ln_ffn2", out);
    ln_final.AddParams(prefix + ".ln_final", out);
    ffn1.AddParams(prefix + ".ffn1", out);
    ffn2.AddParams(prefix + ".ffn2", out);
    attn.AddParams(prefix + ".attn", out);
    pw1.AddParams(prefix + ".pw1", out);
    pw2.AddParams(prefix + ".pw2", out);
    (*out)[prefix + ".dw"] = dw;
  }
};

/// Pre-norm transformer encoder layer: x += Drop(Attn(LN(x))); x += Drop(FFN(LN(x))).
struct TransformerEncoderLayer {
  LayerConfig config;
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  FeedForward ffn;

  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(const LayerConfig &cfg, Rng &rng)
      : config(cfg), ln1(cfg.model_dim), ln2(cfg.model_dim), attn(cfg, rng), ffn(cfg, rng) {}

  Tensor Forward(const Tensor &x, bool train, Rng &rng,
                 AttentionWeights *weights_out = nullptr) const {
    double p = config.dropout;
    Tensor a = ln1.Forward(x);
    Tensor h = Add(x, Dropout(attn.Forward(a, a, nullptr, train, rng, weights_out), p, train, rng));
    return Add(h, Dropout(ffn.Forward(ln2.Forward(h), train, rng), p, train, rng));
  }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    ln1.AddParams(prefix + ".ln1", out);
    ln2.AddParams(prefix + ".ln2", out);
    attn.AddParams(prefix + ".attn", out);
    ffn.AddParams(prefix + ".ffn", out);
  }
};

/// Pre-norm transformer decoder layer: causal self-attention, cross-attention
/// over the encoder memory (weights exposed for analysis), feed-forward.
struct TransformerDecoderLayer {
  LayerConfig config;
  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;

  TransformerDecoderLayer() = default;
  TransformerDecoderLayer(const LayerConfig &cfg, Rng &rng)
      : config(cfg),
        ln1(cfg.model_dim),
        ln2(cfg.model_dim),
        ln3(cfg.model_dim),
        self_attn(cfg, rng),
        cross_attn(cfg, rng),
        ffn(cfg, rng) {}

  Tensor Forward(const Tensor &x, const Tensor &memory, bool train, Rng &rng,
                 AttentionWeights *cross_weights_out = nullptr) const {
    double p = config.dropout;
    Tensor mask = CausalMask(x.Rows());
    Tensor a = ln1.Forward(x);
    Tensor h = Add(x, Dropout(self_attn.Forward(a, a, &mask, train, rng), p, train, rng));
    Tensor c = ln2.Forward(h);
    h = Add(h, Dropout(cross_attn.Forward(c, memory, nullptr, train, rng, cross_weights_out), p,
                       train, rng));
    return Add(h, Dropout(ffn.Forward(ln3.Forward(h), train, rng), p, train, rng));
  }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    ln1.AddParams(prefix + ".ln1", out);
    ln2.AddParams(prefix + ".ln2", out);
    ln3.AddParams(prefix + ".ln3", out);
    self_attn.AddParams(prefix + ".self_attn", out);
    cross_attn.AddParams(prefix + ".cross_attn", out);
    ffn.AddParams(prefix + ".ffn", out);
  }
};

/// Encoder stack with a closing LayerNorm (pre-norm convention).
struct TransformerEncoder {
  std::vector<TransformerEncoderLayer> layers;
  LayerNorm ln_final;

  TransformerEncoder() = default;
  TransformerEncoder(const LayerConfig &cfg, size_t num_layers, Rng &rng)
      : ln_final(cfg.model_dim) {
    for (size_t i = 0; i < num_layers; ++i) layers.emplace_back(cfg, rng);
  }

  Tensor Forward(const Tensor &x, bool train, Rng &rng,
                 std::vector<AttentionWeights> *weights_out = nullptr) const {
    Tensor h = x;
    for (const TransformerEncoderLayer &layer : layers) {
      AttentionWeights w;
      h = layer.Forward(h, train, rng, weights_out != nullptr ? &w : nullptr);
      if (weights_out != nullptr) weights_out->push_back(std::move(w));
    }
    return ln_final.Forward(h);
  }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].AddParams(prefix + ".layer" + std::to_string(i), out);
    ln_final.AddParams(prefix + ".ln_final", out);
  }
};

/// Decoder stack with a closing LayerNorm; collects per-layer cross-attention.
struct TransformerDecoder {
  std::vector<TransformerDecoderLayer> layers;
  LayerNorm ln_final;

  TransformerDecoder() = default;
  TransformerDecoder(const LayerConfig &cfg, size_t num_layers, Rng &rng)
      : ln_final(cfg.model_dim) {
    for (size_t i = 0; i < num_layers; ++i) layers.emplace_back(cfg, rng);
  }

  Tensor Forward(const Tensor &x, const Tensor &memory, bool train, Rng &rng,
                 std::vector<AttentionWeights> *cross_weights_out = nullptr) const {
    Tensor h = x;
    for (const TransformerDecoderLayer &layer : layers) {
      AttentionWeights w;
      h = layer.Forward(h, memory, train, rng, cross_weights_out != nullptr ? &w : nullptr);
      if (cross_weights_out != nullptr) cross_weights_out->push_back(std::move(w));
    }
    return ln_final.Forward(h);
  }

  void AddParams(const std::string &prefix, ParamMap *out) const {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].AddParams(prefix + ".layer" + std::to_string(i), out);
    ln_final.AddParams(prefix + ".ln_final", out);
  }
};

}  // namespace mspst

#endif  // MSPST_NN_HPP_

// mspst/losses.hpp

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

#ifndef MSPST_LOSSES_HPP_
#define MSPST_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mspst/data.hpp"
#include "mspst/decode.hpp"
#include "mspst/model.hpp"
#include "mspst/tensor.hpp"
#include "mspst/vocab.hpp"

namespace mspst {

// ---------------------------------------------------------------------------
// CTC
// ---------------------------------------------------------------------------

/// Raised when no alignment path exists (the target, with the blanks forced
/// between adjacent repeats, needs more frames than the input provides).
class CtcInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimum number of frames that admits any alignment: one per target token
/// plus one forced blank between each adjacent repeated pair.
inline size_t CtcMinFrames(const TokenSeq &target) {
  size_t repeats = 0;
  for (size_t i = 0; i + 1 < target.size(); ++i)
    if (target[i] == target[i + 1]) ++repeats;
  return target.size() + repeats;
}

/// Standard CTC collapse: merge adjacent repeats first, then remove blanks
/// (the order matters: "aab-b" collapses to "ab", not "abb").
inline TokenSeq CtcCollapse(const TokenSeq &path, size_t blank_id) {
  TokenSeq out;
  for (size_t i = 0; i < path.size(); ++i) {
    if (i > 0 && path[i] == path[i - 1]) continue;
    if (path[i] == blank_id) continue;
    out.push_back(path[i]);
  }
  return out;
}

/// CTC negative log-likelihood of `target` under per-frame log-probabilities
/// [T x V], computed with the log-space forward-backward recursion over the
/// blank-interleaved label sequence.  Emission probabilities are counted in
/// both the forward and backward variables, so alpha_t(s) * beta_t(s) double
/// counts the frame-t emission and the posterior divides it back out.
///
/// The gradient with respect to each input entry u_{t,k} (treated as a free
/// variable, so the result is exact whether or not the rows are normalized):
///
///   dL/du_{t,k} = -exp( lse_{s : l'_s = k}(ln alpha_t(s) + ln beta_t(s))
///                       - u_{t,k} - ln P )
///
/// Throws CtcInfeasibleError when T < |target| + #adjacent-repeats.
inline Tensor CtcLoss(const Tensor &log_probs, const TokenSeq &target, size_t blank_id) {
  Require(log_probs.Rank() == 2, "CtcLoss: log_probs must be [T x V]");
  const size_t t_len = log_probs.Rows(), v = log_probs.Cols();
  Require(t_len >= 1, "CtcLoss: empty input");
  Require(blank_id < v, "CtcLoss: blank_id out of vocabulary");
  for (size_t tok : target) {
    Require(tok < v, "CtcLoss: target token out of vocabulary");
    Require(tok != blank_id, "CtcLoss: target must not contain blank");
  }
  if (t_len < CtcMinFrames(target))
    throw CtcInfeasibleError("CtcLoss: target needs " + std::to_string(CtcMinFrames(target)) +
                             " frames, input has " + std::to_string(t_len));

  const size_t s_len = 2 * target.size() + 1;
  auto lab = [&](size_t s) { return (s % 2 == 1) ? target[s / 2] : blank_id; };
  const std::vector<double> &lp = log_probs.Data();
  auto u = [&](size_t t, size_t k) { return lp[t * v + k]; };

  std::vector<double> alpha(t_len * s_len, kNegInf);
  alpha[0] = u(0, blank_id);
  if (s_len > 1) alpha[1] = u(0, lab(1));
  for (size_t t = 1; t < t_len; ++t)
    for (size_t s = 0; s < s_len; ++s) {
      double acc = alpha[(t - 1) * s_len + s];
      if (s >= 1) acc = LogSumExp2(acc, alpha[(t - 1) * s_len + s - 1]);
      if (s >= 2 && lab(s) != blank_id && lab(s) != lab(s - 2))
        acc = LogSumExp2(acc, alpha[(t - 1) * s_len + s - 2]);
      alpha[t * s_len + s] = acc + u(t, lab(s));
    }
  double log_p = alpha[(t_len - 1) * s_len + s_len - 1];
  if (s_len > 1) log_p = LogSumExp2(log_p, alpha[(t_len - 1) * s_len + s_len - 2]);

  std::vector<double> beta(t_len * s_len, kNegInf);
  beta[(t_len - 1) * s_len + s_len - 1] = u(t_len - 1, lab(s_len - 1));
  if (s_len > 1) beta[(t_len - 1) * s_len + s_len - 2] = u(t_len - 1, lab(s_len - 2));
  for (size_t t = t_len - 1; t-- > 0;)
    for (size_t s = 0; s < s_len; ++s) {
      double acc = beta[(t + 1) * s_len + s];
      if (s + 1 < s_len) acc = LogSumExp2(acc, beta[(t + 1) * s_len + s + 1]);
      if (s + 2 < s_len && lab(s + 2) != blank_id && lab(s + 2) != lab(s))
        acc = LogSumExp2(acc, beta[(t + 1) * s_len + s + 2]);
      beta[t * s_len + s] = acc + u(t, lab(s));
    }

  std::vector<double> grad(t_len * v, 0.0);
  for (size_t t = 0; t < t_len; ++t) {
    std::vector<double> acc(v, kNegInf);
    for (size_t s = 0; s < s_len; ++s) {
      size_t k = lab(s);
      acc[k] = LogSumExp2(acc[k], alpha[t * s_len + s] + beta[t * s_len + s]);
    }
    for (size_t k = 0; k < v; ++k)
      if (acc[k] != kNegInf) grad[t * v + k] = -std::exp(acc[k] - u(t, k) - log_p);
  }

  return internal::MakeOp({1}, {-log_p}, {log_probs},
                          [grad = std::move(grad)](TensorNode &self) {
                            double g = self.grad[0];
                            std::vector<double> out(grad.size());
                            for (size_t i = 0; i < out.size(); ++i) out[i] = grad[i] * g;
                            internal::AccumulateInto(*self.parents[0], out);
                          });
}

/// Reference CTC loss by exhaustive path enumeration: sums the probability
/// of every length-T path whose collapse equals the target.  Exponential in
/// T (V^T paths), guarded to small search spaces; exists purely as the
/// oracle the dynamic-programming implementation is checked against.
inline double CtcBruteForce(const Tensor &log_probs, const TokenSeq &target, size_t blank_id) {
  Require(log_probs.Rank() == 2, "CtcBruteForce: log_probs must be [T x V]");
  const size_t t_len = log_probs.Rows(), v = log_probs.Cols();
  Require(t_len >= 1 && v >= 1, "CtcBruteForce: empty input");
  Require(blank_id < v, "CtcBruteForce: blank_id out of vocabulary");
  double paths = std::pow(static_cast<double>(v), static_cast<double>(t_len));
  Require(paths <= 2e6, "CtcBruteForce: search space too large");

  double log_p = kNegInf;
  TokenSeq path(t_len, 0);
  bool any = true;
  while (any) {
    TokenSeq collapsed = CtcCollapse(path, blank_id);
    if (collapsed == target) {
      double s = 0.0;
      for (size_t t = 0; t < t_len; ++t) s += log_probs(t, path[t]);
      log_p = LogSumExp2(log_p, s);
    }
    // Odometer increment over the V^T path space.
    any = false;
    for (size_t t = t_len; t-- > 0;) {
      if (++path[t] < v) {
        any = true;
        break;
      }
      path[t] = 0;
    }
  }
  if (log_p == kNegInf)
    throw CtcInfeasibleError("CtcBruteForce: no path collapses to the target");
  return -log_p;
}

// ---------------------------------------------------------------------------
// Cross-modal contrastive loss
// ---------------------------------------------------------------------------

/// Mean over time of a [T x D] sequence -> [D].
inline Tensor MeanPoolRows(const Tensor &x) {
  Require(x.Rank() == 2 && x.Rows() > 0, "MeanPoolRows: nonempty [T x D] required");
  return Scale(SumRows(x), 1.0 / static_cast<double>(x.Rows()));
}

/// Cosine similarity of two [D] vectors as a scalar graph node.  The squared
/// norms are floored (at 1e-12 on the norm scale) so a zero vector yields
/// similarity 0 with finite gradients instead of a division by zero.
inline Tensor CosineSimilarity(const Tensor &a, const Tensor &b) {
  Require(a.Rank() == 1 && b.Rank() == 1 && a.NumElements() == b.NumElements(),
          "CosineSimilarity: two [D] vectors required");
  Tensor dot = Sum(Mul(a, b));
  Tensor inv_na = PowScalar(AddScalar(Sum(Mul(a, a)), 1e-24), -0.5);
  Tensor inv_nb = PowScalar(AddScalar(Sum(Mul(b, b)), 1e-24), -0.5);
  return Mul(Mul(dot, inv_na), inv_nb);
}

/// Cross-modal InfoNCE over a batch of speech-side sequences A_i and
/// text-side sequences M_j (both [T x D], mean-pooled before the cosine):
///
///   loss = sum_i [ log sum_{j != i} exp(cos(A_i, M_j)/tau) - cos(A_i, M_i)/tau ]
///
/// The positive pair is excluded from the denominator; include_positive
/// switches to the conventional form that keeps j == i in the sum.  The
/// reduction over the batch is a sum.  B >= 2 is required — with a single
/// sample the exclusive denominator is empty.
inline Tensor ContrastiveLoss(const std::vector<Tensor> &a_seqs, const std::vector<Tensor> &m_seqs,
                              double tau, bool include_positive = false) {
  Require(tau > 0.0, "ContrastiveLoss: tau must be positive");
  Require(a_seqs.size() == m_seqs.size(), "ContrastiveLoss: batch size mismatch");
  const size_t b = a_seqs.size();
  Require(b >= 2, "ContrastiveLoss: batch of at least 2 required");

  std::vector<Tensor> pa(b), pm(b);
  for (size_t i = 0; i < b; ++i) {
    pa[i] = MeanPoolRows(a_seqs[i]);
    pm[i] = MeanPoolRows(m_seqs[i]);
    Require(pa[i].NumElements() == pm[i].NumElements(), "ContrastiveLoss: dim mismatch");
  }
  std::vector<std::vector<Tensor>> sim(b, std::vector<Tensor>(b));
  for (size_t i = 0; i < b; ++i)
    for (size_t j = 0; j < b; ++j)
      sim[i][j] = Scale(CosineSimilarity(pa[i], pm[j]), 1.0 / tau);

  Tensor loss = Tensor::Scalar(0.0);
  for (size_t i = 0; i < b; ++i) {
    std::vector<Tensor> denom;
    denom.reserve(b);
    for (size_t j = 0; j < b; ++j)
      if (j != i || include_positive) denom.push_back(sim[i][j]);
    loss = Add(loss, Sub(LogSumExpVec(ConcatVec(denom)), sim[i][i]));
  }
  return loss;
}

/// Self-distilled variant: the text-side sequences come from the model's own
/// greedy CTC decodes t' (blanks retained), run through the frozen text
/// encoder.  Both the decode (an argmax on values) and the teacher forward
/// (gradients disabled) are stop-gradient: only the speech side A learns.
inline Tensor KdContrastiveLoss(const std::vector<Tensor> &a_seqs,
                                const std::vector<Tensor> &ctc_log_probs,
                                const ModelAssembly &assembly, double tau,
                                bool include_positive = false) {
  Require(a_seqs.size() == ctc_log_probs.size(), "KdContrastiveLoss: batch size mismatch");
  std::vector<Tensor> m_seqs(a_seqs.size());
  {
    NoGradGuard no_grad;
    Rng rng(0);  // eval mode draws nothing
    for (size_t i = 0; i < a_seqs.size(); ++i) {
      TokenSeq t_prime =
          CtcGreedyDecode(ctc_log_probs[i], /*keep_blanks=*/true, assembly.vocab.blank_id);
      m_seqs[i] = assembly.TextEncoderForward(t_prime, /*train=*/false, rng);
    }
  }
  return ContrastiveLoss(a_seqs, m_seqs, tau, include_positive);
}

// ---------------------------------------------------------------------------
// The KD interpolation schedule
// ---------------------------------------------------------------------------

/// beta starts at 1 and steps down by `decrement` every `interval_steps`
/// optimizer steps (phase-local step count), floored at `min_beta`:
///   beta(step) = max(min_beta, initial - decrement * floor(step / interval)).
struct BetaSchedule {
  double initial = 1.0;
  double decrement = 0.1;
  uint64_t interval_steps = 5000;
  double min_beta = 0.0;
};

inline double BetaAt(uint64_t step, const BetaSchedule &schedule) {
  Require(schedule.interval_steps >= 1, "BetaAt: interval_steps must be positive");
  double ticks = static_cast<double>(step / schedule.interval_steps);
  return std::max(schedule.min_beta, schedule.initial - schedule.decrement * ticks);
}

// ---------------------------------------------------------------------------
// The composite ASR loss
// ---------------------------------------------------------------------------

/// Ablation switches for the alignment step.  Disabling KD pins the
/// interpolation at beta = 1 (pure ground-truth contrastive); disabling CL
/// pins it at beta = 0; disabling both leaves CTC alone.
struct AsrLossOptions {
  bool use_cl = true;
  bool use_kd = true;
  bool include_positive = false;  // InfoNCE denominator variant
};

/// One training step's loss values.  The tensor carries the graph for the
/// backward pass; the doubles are the logged metrics.  All batch reductions
/// are sums, so
///   total == ctc + alpha * (beta * cl + (1 - beta) * cl_kd)
/// holds by construction (`total` is read off the graph output node).
struct LossBreakdown {
  double ctc = 0.0;
  double cl = 0.0;
  double cl_kd = 0.0;
  double total = 0.0;
  double tau = 0.0, alpha = 0.0, beta = 0.0;
  size_t batch_size = 0;
  size_t ctc_skipped = 0;  // length-infeasible samples skipped with a warning
  Tensor total_tensor;
};

/// L = L_CTC + alpha * (beta * L_CL + (1 - beta) * L'_CL) over one batch.
/// Speech runs through the encoder and alignment adapter once per sample;
/// the same hidden states feed the CTC head, the textual adapter and (via
/// the greedy decode of the CTC posteriors) the KD teacher.  Ground-truth
/// teacher targets M(t) are computed with gradients disabled: in this phase
/// the text encoder is frozen and serves only as the anchor space.
inline LossBreakdown AsrLoss(const std::vector<const AsrPair *> &batch,
                             const ModelAssembly &assembly, double tau, double alpha,
                             const BetaSchedule &schedule, uint64_t step, bool train, Rng &rng,
                             const AsrLossOptions &opts = AsrLossOptions()) {
  const bool contrastive = opts.use_cl || opts.use_kd;
  Require(!batch.empty(), "AsrLoss: empty batch");
  if (contrastive) Require(batch.size() >= 2, "AsrLoss: contrastive losses need a batch of >= 2");

  LossBreakdown out;
  out.tau = tau;
  out.alpha = alpha;
  out.batch_size = batch.size();
  if (opts.use_cl && opts.use_kd)
    out.beta = BetaAt(step, schedule);
  else if (opts.use_cl)
    out.beta = 1.0;
  else if (opts.use_kd)
    out.beta = 0.0;
  else
    out.beta = BetaAt(step, schedule);  // logged; both weighted terms are zero

  std::vector<Tensor> a_seqs, ctc_lps;
  Tensor ctc_total = Tensor::Scalar(0.0);
  for (const AsrPair *pair : batch) {
    Tensor frames = assembly.SpeechEncoderForward(pair->s, train, rng);
    AlignmentOutput align = assembly.AlignmentAdapterForward(frames, train, rng);
    try {
      ctc_total = Add(ctc_total, CtcLoss(align.ctc_log_probs, pair->t, assembly.vocab.blank_id));
    } catch (const CtcInfeasibleError &e) {
      ++out.ctc_skipped;
      std::cerr << "[mspst] warning: skipping CTC term for infeasible sample ("
                << e.what() << ")\n";
    }
    if (contrastive) {
      a_seqs.push_back(assembly.TextualAdapterForward(align.hidden, train, rng));
      ctc_lps.push_back(align.ctc_log_probs);
    }
  }

  Tensor cl_t = Tensor::Scalar(0.0);
  if (opts.use_cl) {
    std::vector<Tensor> m_seqs(batch.size());
    {
      NoGradGuard no_grad;
      Rng teacher_rng(0);  // eval mode draws nothing
      for (size_t i = 0; i < batch.size(); ++i)
        m_seqs[i] = assembly.TextEncoderForward(batch[i]->t, /*train=*/false, teacher_rng);
    }
    cl_t = ContrastiveLoss(a_seqs, m_seqs, tau, opts.include_positive);
  }
  Tensor kd_t = Tensor::Scalar(0.0);
  if (opts.use_kd)
    kd_t = KdContrastiveLoss(a_seqs, ctc_lps, assembly, tau, opts.include_positive);

  Tensor mix = Add(Scale(cl_t, out.beta), Scale(kd_t, 1.0 - out.beta));
  out.total_tensor = Add(ctc_total, Scale(mix, alpha));
  out.ctc = ctc_total.Item();
  out.cl = cl_t.Item();
  out.cl_kd = kd_t.Item();
  out.total = out.total_tensor.Item();
  return out;
}

// ---------------------------------------------------------------------------
// Label-smoothed cross entropy and the MT / ST losses
// ---------------------------------------------------------------------------

/// Sentinel for "no padding id" (every position counts).
inline constexpr size_t kNoPad = std::numeric_limits<size_t>::max();

/// Label-smoothed cross entropy over [N x V] logits, averaged over the
/// non-pad positions:
///   loss_t = -(1 - eps) * lp[y_t] - (eps / V) * sum_k lp[k]
/// where lp = log softmax of the logits.  The smoothing mass is spread over
/// the full vocabulary (true class included), so uniform logits cost ln V
/// for any eps.  eps = 0 recovers plain NLL.
inline Tensor LabelSmoothedCe(const Tensor &logits, const TokenSeq &targets, double epsilon,
                              size_t pad_id = kNoPad) {
  Require(logits.Rank() == 2, "LabelSmoothedCe: logits must be [N x V]");
  Require(targets.size() == logits.Rows(), "LabelSmoothedCe: target length mismatch");
  Require(epsilon >= 0.0 && epsilon < 1.0, "LabelSmoothedCe: epsilon must be in [0, 1)");
  const size_t n = logits.Rows(), v = logits.Cols();
  for (size_t tok : targets) Require(tok < v, "LabelSmoothedCe: target token out of vocabulary");

  std::vector<double> w(n), w_rows(n * v);
  double count = 0.0;
  for (size_t i = 0; i < n; ++i) {
    w[i] = (targets[i] == pad_id) ? 0.0 : 1.0;
    count += w[i];
    std::fill(&w_rows[i * v], &w_rows[i * v] + v, w[i]);
  }
  Require(count > 0.0, "LabelSmoothedCe: every position is padding");

  Tensor lp = LogSoftmaxRows(logits);
  Tensor picked = Mul(GatherCols(lp, targets), Tensor::WithData({n}, std::move(w)));
  Tensor term1 = Scale(Sum(picked), -(1.0 - epsilon));
  Tensor term2 = Scale(Sum(Mul(lp, Tensor::WithData({n, v}, std::move(w_rows)))),
                       -epsilon / static_cast<double>(v));
  return Scale(Add(term1, term2), 1.0 / count);
}

/// Teacher-forced sequence loss: feeds [bos, y] to the decoder and scores
/// [y, eos] with label-smoothed cross entropy (position-averaged).
inline Tensor SeqCrossEntropy(const ModelAssembly &assembly, const Tensor &memory,
                              const TokenSeq &y, double epsilon, bool train, Rng &rng) {
  TokenSeq prefix, target;
  prefix.reserve(y.size() + 1);
  target.reserve(y.size() + 1);
  prefix.push_back(assembly.vocab.bos_id);
  prefix.insert(prefix.end(), y.begin(), y.end());
  target.insert(target.end(), y.begin(), y.end());
  target.push_back(assembly.vocab.eos_id);
  Tensor logits = assembly.DecoderForward(memory, prefix, train, rng);
  return LabelSmoothedCe(logits, target, epsilon);
}

/// The denoising MT loss and its pieces; `total_tensor` carries the graph.
struct MtLossResult {
  double clean_nll = 0.0;
  double noisy_nll = 0.0;
  double total = 0.0;
  TokenSeq noisy_input;  // g(x) actually used (equal to x when r == 0)
  Tensor total_tensor;
};

/// L = clean term + noisy term: the decoder is asked for y twice, once from
/// M(x) and once from M(g(x)) where g inserts blanks at random gaps.  With
/// use_sidae = false (the ablation), only the clean term is trained.
/// With r == 0 the perturbation is the identity and — in eval mode, where
/// no dropout noise distinguishes the two forwards — total == 2 * clean.
inline MtLossResult MtDenoisingLoss(const TokenSeq &x, const TokenSeq &y,
                                    const ModelAssembly &assembly, double r,
                                    double label_smoothing, bool train, Rng &rng,
                                    bool use_sidae = true) {
  Require(!x.empty(), "MtDenoisingLoss: empty source");
  MtLossResult out;
  Tensor mem_clean = assembly.TextEncoderForward(x, train, rng);
  Tensor clean = SeqCrossEntropy(assembly, mem_clean, y, label_smoothing, train, rng);
  out.clean_nll = clean.Item();
  if (use_sidae) {
    out.noisy_input = BlankPerturb(x, r, assembly.vocab, rng);
    Tensor mem_noisy = assembly.TextEncoderForward(out.noisy_input, train, rng);
    Tensor noisy = SeqCrossEntropy(assembly, mem_noisy, y, label_smoothing, train, rng);
    out.noisy_nll = noisy.Item();
    out.total_tensor = Add(clean, noisy);
  } else {
    out.noisy_input = x;
    out.total_tensor = clean;
  }
  out.total = out.total_tensor.Item();
  return out;
}

/// ST fine-tuning loss for one sample: speech through the full encoder path,
/// teacher-forced decode of y.  The text encoder takes no part.
inline Tensor StSampleLoss(const ModelAssembly &assembly, const SpeechSeq &s, const TokenSeq &y,
                           double label_smoothing, bool train, Rng &rng) {
  Tensor memory = assembly.StEncode(s, train, rng);
  return SeqCrossEntropy(assembly, memory, y, label_smoothing, train, rng);
}

}  // namespace mspst

#endif  // MSPST_LOSSES_HPP_

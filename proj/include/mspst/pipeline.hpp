// mspst/pipeline.hpp

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

// The three-step training pipeline: MT -> ASR -> ST, each phase handing its
// checkpoint to the next.
//
//   Step 1 (MT):  text encoder + decoder + shared embedding, denoising loss.
//   Step 2 (ASR): speech encoder + adapters, CTC + contrastive losses; the
//                 text encoder is frozen for the whole phase, the speech
//                 encoder for the first warmup_freeze_steps.
//   Step 3 (ST):  everything except the text encoder, which is dropped from
//                 both the forward graph and the optimizer.
//
// All three phases share one loop skeleton (RunPhaseLoop): shuffle, train,
// evaluate on dev once per epoch, snapshot a checkpoint, early-stop on
// patience.  Phase-specific behavior (which loss, which dev metrics, which
// blocks train) enters through a small hook struct, so the bookkeeping that
// must be identical everywhere — seeding, freezing, hashing, logging,
// halting — exists exactly once.
//
// Bookkeeping guarantees, all load-bearing for reproducibility:
//  * Step counters are phase-local: the beta schedule and the warmup freeze
//    both restart from zero when a phase starts.
//  * Every RNG stream is derived from (seed, phase, epoch, batch index), so
//    any batch's noise is reproducible in isolation.
//  * Frozen blocks are verified by hashing parameter bytes at phase
//    boundaries (and at the warmup boundary inside ASR); a violation is a
//    hard error, not a warning.
//  * Optimizer state never crosses a phase boundary: each phase gets fresh
//    moment buffers, and newly unfrozen parameters start from zero moments.
//  * Every logged metric value is a deterministic function of (config,
//    seeds, corpus).

#ifndef MSPST_PIPELINE_HPP_
#define MSPST_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mspst/adam.hpp"
#include "mspst/checkpoint.hpp"
#include "mspst/common.hpp"
#include "mspst/config.hpp"
#include "mspst/data.hpp"
#include "mspst/losses.hpp"
#include "mspst/model.hpp"
#include "mspst/rng.hpp"
#include "mspst/tensor.hpp"

namespace mspst {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricRow {
  Phase phase;
  size_t epoch;   // 1-based
  uint64_t step;  // optimizer steps completed in this phase when the row was logged
  std::string metric;
  double value;
};

/// Append-only metric log; serializes to CSV with a fixed header.  All values
/// are rendered round-trip exactly, so identical runs produce byte-identical
/// files.
class MetricsLog {
 public:
  void Add(Phase phase, size_t epoch, uint64_t step, const std::string &metric, double value) {
    rows_.push_back(MetricRow{phase, epoch, step, metric, value});
  }

  const std::vector<MetricRow> &Rows() const { return rows_; }

  /// All values of one metric within one phase, in logging order.
  std::vector<double> Series(Phase phase, const std::string &metric) const {
    std::vector<double> out;
    for (const MetricRow &r : rows_)
      if (r.phase == phase && r.metric == metric) out.push_back(r.value);
    return out;
  }

  std::string ToCsv() const {
    std::string out = "phase,epoch,step,metric,value\n";
    for (const MetricRow &r : rows_) {
      out += PhaseName(r.phase);
      out += ',';
      out += std::to_string(r.epoch);
      out += ',';
      out += std::to_string(r.step);
      out += ',';
      out += r.metric;
      out += ',';
      out += FormatDouble(r.value);
      out += '\n';
    }
    return out;
  }

  void WriteCsv(const std::filesystem::path &path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);  // binary: no newline translation
    Check(os.good(), "MetricsLog: cannot open '" + path.string() + "'");
    std::string csv = ToCsv();
    os.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    Check(os.good(), "MetricsLog: write to '" + path.string() + "' failed");
  }

 private:
  std::vector<MetricRow> rows_;
};

/// Lowercase phase tag for file names ("mt", "asr", "st").
inline std::string PhaseTag(Phase p) {
  std::string s = PhaseName(p);
  for (char &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// ---------------------------------------------------------------------------
// Dev-set evaluation helpers (shared with the acceptance harness)
// ---------------------------------------------------------------------------

/// Token-weighted mean NLL (epsilon = 0) of teacher-forced y given text x.
/// Positions are y plus the closing eos, so short and long pairs weigh in
/// proportionally, which makes exp(nll) a per-token perplexity.
inline double DevMtNll(const ModelAssembly &assembly, const std::vector<MtPair> &pairs) {
  Require(!pairs.empty(), "DevMtNll: empty dev set");
  NoGradGuard ng;
  Rng rng(0);  // eval mode draws nothing
  double sum = 0.0;
  size_t tokens = 0;
  for (const MtPair &p : pairs) {
    Tensor memory = assembly.TextEncoderForward(p.x, /*train=*/false, rng);
    double nll = SeqCrossEntropy(assembly, memory, p.y, /*epsilon=*/0.0, false, rng).Item();
    size_t n = p.y.size() + 1;
    sum += nll * static_cast<double>(n);
    tokens += n;
  }
  return sum / static_cast<double>(tokens);
}

/// Token-weighted mean NLL (epsilon = 0) of teacher-forced y given speech s.
inline double DevStNll(const ModelAssembly &assembly, const std::vector<StPair> &pairs) {
  Require(!pairs.empty(), "DevStNll: empty dev set");
  NoGradGuard ng;
  Rng rng(0);
  double sum = 0.0;
  size_t tokens = 0;
  for (const StPair &p : pairs) {
    Tensor memory = assembly.StEncode(p.s, /*train=*/false, rng);
    double nll = SeqCrossEntropy(assembly, memory, p.y, /*epsilon=*/0.0, false, rng).Item();
    size_t n = p.y.size() + 1;
    sum += nll * static_cast<double>(n);
    tokens += n;
  }
  return sum / static_cast<double>(tokens);
}

/// ASR dev metrics: mean CTC loss over the scorable samples and the mean
/// pooled cross-modal cosine between the textual-adapter output A(s) and the
/// text-encoder output M(t) — the quantity the alignment step is supposed to
/// drive up.
struct AsrDevMetrics {
  double ctc = 0.0;            // mean -log P(t | s) over samples CTC could score
  double crossmodal_cos = 0.0; // mean cosine(pool A(s), pool M(t))
  size_t ctc_skipped = 0;      // samples whose target cannot fit the frames
};

inline AsrDevMetrics DevAsrMetrics(const ModelAssembly &assembly,
                                   const std::vector<AsrPair> &pairs) {
  Require(!pairs.empty(), "DevAsrMetrics: empty dev set");
  NoGradGuard ng;
  Rng rng(0);
  AsrDevMetrics out;
  double ctc_sum = 0.0, cos_sum = 0.0;
  size_t scored = 0;
  for (const AsrPair &p : pairs) {
    Tensor enc = assembly.SpeechEncoderForward(p.s, /*train=*/false, rng);
    AlignmentOutput align = assembly.AlignmentAdapterForward(enc, false, rng);
    try {
      ctc_sum += CtcLoss(align.ctc_log_probs, p.t, assembly.vocab.blank_id).Item();
      ++scored;
    } catch (const CtcInfeasibleError &) {
      ++out.ctc_skipped;
    }
    Tensor a = assembly.TextualAdapterForward(align.hidden, false, rng);
    Tensor m = assembly.TextEncoderForward(p.t, false, rng);
    cos_sum += CosineSimilarity(MeanPoolRows(a), MeanPoolRows(m)).Item();
  }
  Check(scored > 0, "DevAsrMetrics: no dev sample was CTC-feasible");
  out.ctc = ctc_sum / static_cast<double>(scored);
  out.crossmodal_cos = cos_sum / static_cast<double>(pairs.size());
  return out;
}

// ---------------------------------------------------------------------------
// The shared phase loop
// ---------------------------------------------------------------------------

/// What one phase hands back: the best-dev checkpoint (what the next phase
/// trains from), the trailing window of per-epoch checkpoints (what
/// averaging consumes), and bookkeeping for tests and reports.
struct PhaseRunResult {
  Checkpoint best;                           // weights at the best dev evaluation
  std::vector<Checkpoint> last_checkpoints;  // newest last; at most checkpoint_average_k
  size_t best_epoch = 0;                     // 1-based; 0 = no evaluation ran
  double best_dev = 0.0;                     // stop-metric value at best_epoch
  size_t epochs_run = 0;
  uint64_t steps_run = 0;
  bool stopped_early = false;
  std::set<std::string> optimized_params;    // names that received at least one update
};

namespace internal {

/// Ordered (name, value) pairs: metric logging preserves insertion order so
/// CSV rows come out in a stable, readable sequence.
using StepMetrics = std::vector<std::pair<std::string, double>>;

/// Phase-specific behavior injected into RunPhaseLoop.
struct PhaseHooks {
  size_t n_train = 0;
  bool require_pairs = false;  // ASR: contrastive losses need batches of >= 2
  /// Builds the batch-mean loss tensor (graph attached) and reports step
  /// metrics.  `step` is the phase-local optimizer step about to happen.
  std::function<Tensor(const std::vector<size_t> &, uint64_t step, Rng &, StepMetrics *)>
      train_batch;
  /// Evaluates the dev set; must include `stop_metric` among its entries.
  std::function<StepMetrics()> dev_eval;
  std::string stop_metric;
};

/// Seed tags for the per-(phase, epoch, batch) stream derivation.
inline constexpr uint64_t kPhaseSeedTag = 0x50A17E00ULL;
inline constexpr uint64_t kShuffleSeedTag = 0xB0BAULL;
inline constexpr uint64_t kBatchSeedTag = 0x10000ULL;

/// The epoch/batch skeleton every phase runs.  Handles shuffling, gradient
/// zeroing, the optimizer, freeze masks and their hash verification, per-epoch
/// dev evaluation, checkpointing, early stopping, and metric logging.
inline PhaseRunResult RunPhaseLoop(const PipelineConfig &cfg, Phase phase,
                                   ModelAssembly &assembly, const PhaseHooks &hooks,
                                   MetricsLog &log) {
  Require(hooks.n_train > 0, std::string(PhaseName(phase)) + ": missing training split");
  const uint64_t fingerprint = cfg.Fingerprint();
  ParamMap params = assembly.NamedParams();
  std::map<std::string, AdamState> optimizer;

  static constexpr std::array<const char *, 6> kBlocks = {
      "speech_encoder.", "alignment_adapter.", "textual_adapter.",
      "text_encoder.",   "decoder.",           "shared_embedding"};

  // Hash every block now; blocks that stay frozen for the whole phase must
  // match these at the end, and the speech encoder must match at the ASR
  // warmup boundary.
  std::map<std::string, uint64_t> start_hash;
  for (const char *b : kBlocks) start_hash[b] = assembly.HashBlock(b);
  const FreezeMask mask_start = FreezeForPhase(phase, 0, cfg.warmup_freeze_steps);
  const FreezeMask mask_end =
      FreezeForPhase(phase, std::numeric_limits<uint64_t>::max(), cfg.warmup_freeze_steps);

  const uint64_t phase_seed =
      DeriveSeed(cfg.seed, kPhaseSeedTag + static_cast<uint64_t>(phase));

  PhaseRunResult res;
  uint64_t step = 0;
  bool speech_was_trainable = mask_start.speech_encoder;
  size_t evals_since_best = 0;

  for (size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const uint64_t epoch_seed = DeriveSeed(phase_seed, epoch);
    const std::vector<std::vector<size_t>> batches = MakeBatches(
        hooks.n_train, cfg.batch_size, DeriveSeed(epoch_seed, kShuffleSeedTag),
        hooks.require_pairs);

    for (size_t b = 0; b < batches.size(); ++b) {
      const FreezeMask mask = FreezeForPhase(phase, step, cfg.warmup_freeze_steps);
      if (mask.speech_encoder && !speech_was_trainable) {
        // The warmup freeze just ended; the frozen steps must not have moved
        // the speech encoder by a single byte.
        Check(assembly.HashBlock("speech_encoder.") == start_hash["speech_encoder."],
              "pipeline: speech encoder changed during its warmup freeze");
        speech_was_trainable = true;
      }

      Rng rng(DeriveSeed(epoch_seed, kBatchSeedTag + b));
      for (auto &kv : params) kv.second.ZeroGrad();
      StepMetrics metrics;
      Tensor loss = hooks.train_batch(batches[b], step, rng, &metrics);
      Backward(loss);

      bool finite = true;
      for (const auto &kv : params) {
        if (!mask.BlockTrainable(kv.first)) continue;
        for (double g : kv.second.NodeRef().grad)
          if (!std::isfinite(g)) {
            finite = false;
            break;
          }
        if (!finite) break;
      }
      if (!finite) {
        std::cerr << "[mspst] warning: non-finite gradient at " << PhaseName(phase) << " step "
                  << step << "; batch skipped\n";
      } else {
        for (auto &kv : params) {
          if (!mask.BlockTrainable(kv.first)) continue;
          AdamStep(kv.second, optimizer[kv.first], cfg.adam);
          res.optimized_params.insert(kv.first);
        }
      }

      log.Add(phase, epoch, step, "loss", loss.Item());
      for (const auto &m : metrics) log.Add(phase, epoch, step, m.first, m.second);
      ++step;
    }

    // Dev evaluation, checkpoint, early-stop bookkeeping.
    StepMetrics dev = hooks.dev_eval();
    double stop_value = 0.0;
    bool found = false;
    for (const auto &m : dev) {
      log.Add(phase, epoch, step, m.first, m.second);
      if (m.first == hooks.stop_metric) {
        stop_value = m.second;
        found = true;
      }
    }
    Check(found, "pipeline: dev_eval did not report stop metric '" + hooks.stop_metric + "'");

    Checkpoint ck = MakeCheckpoint(assembly, phase, step, fingerprint);
    res.last_checkpoints.push_back(ck);
    if (res.last_checkpoints.size() > cfg.checkpoint_average_k)
      res.last_checkpoints.erase(res.last_checkpoints.begin());
    if (!cfg.out_dir.empty())
      SaveCheckpoint(std::filesystem::path(cfg.out_dir) /
                         (PhaseTag(phase) + "_epoch" + std::to_string(epoch) + ".ckpt"),
                     ck);

    res.epochs_run = epoch;
    if (res.best_epoch == 0 || stop_value < res.best_dev - cfg.early_stop_min_delta) {
      res.best_dev = stop_value;
      res.best_epoch = epoch;
      res.best = std::move(ck);
      evals_since_best = 0;
    } else {
      ++evals_since_best;
      if (evals_since_best >= cfg.early_stop_patience) {
        res.stopped_early = true;
        break;
      }
    }
  }
  res.steps_run = step;

  // Whole-phase freeze verification: any block that is trainable neither at
  // the start nor at the end of the phase must be byte-identical to when the
  // phase began.
  for (const char *b : kBlocks) {
    if (mask_start.BlockTrainable(b) || mask_end.BlockTrainable(b)) continue;
    Check(assembly.HashBlock(b) == start_hash[b],
          std::string("pipeline: frozen block '") + b + "' changed during " + PhaseName(phase));
  }
  return res;
}

}  // namespace internal

// ---------------------------------------------------------------------------
// The three steps
// ---------------------------------------------------------------------------

/// Step 1: trains text_encoder + decoder + shared_embedding with the
/// denoising MT objective; early-stops when dev perplexity stops improving.
inline PhaseRunResult RunMtStep(const PipelineConfig &cfg, const CorpusSplit &corpus,
                                ModelAssembly &assembly, MetricsLog &log) {
  Require(!corpus.mt_train.empty(), "RunMtStep: missing MT training split");
  Require(!corpus.mt_dev.empty(), "RunMtStep: missing MT dev split");

  internal::PhaseHooks hooks;
  hooks.n_train = corpus.mt_train.size();
  hooks.require_pairs = false;
  hooks.stop_metric = "dev_nll";
  hooks.train_batch = [&](const std::vector<size_t> &batch, uint64_t /*step*/, Rng &rng,
                          internal::StepMetrics *metrics) {
    Tensor total;
    double clean = 0.0, noisy = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
      const MtPair &p = corpus.mt_train[batch[i]];
      MtLossResult r = MtDenoisingLoss(p.x, p.y, assembly, cfg.blank_rate, cfg.label_smoothing,
                                       /*train=*/true, rng, cfg.use_sidae);
      clean += r.clean_nll;
      noisy += r.noisy_nll;
      total = i == 0 ? r.total_tensor : Add(total, r.total_tensor);
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    metrics->push_back({"clean_nll", clean * inv_b});
    metrics->push_back({"noisy_nll", noisy * inv_b});
    return Scale(total, inv_b);
  };
  hooks.dev_eval = [&]() {
    double nll = DevMtNll(assembly, corpus.mt_dev);
    return internal::StepMetrics{{"dev_nll", nll}, {"dev_ppl", std::exp(nll)}};
  };
  return internal::RunPhaseLoop(cfg, Phase::kMT, assembly, hooks, log);
}

/// Step 2: loads the MT checkpoint and trains the speech path with the CTC +
/// contrastive objective.  The text encoder is frozen for the whole phase,
/// the speech encoder for the first warmup_freeze_steps; beta follows its
/// schedule from step 0 of this phase.
inline PhaseRunResult RunAsrStep(const PipelineConfig &cfg, const CorpusSplit &corpus,
                                 const Checkpoint &from_mt, ModelAssembly &assembly,
                                 MetricsLog &log) {
  Require(!corpus.asr_train.empty(), "RunAsrStep: missing ASR training split");
  Require(!corpus.asr_dev.empty(), "RunAsrStep: missing ASR dev split");
  RequirePhaseHandoff(from_mt, Phase::kASR);
  if (from_mt.config_fingerprint != cfg.Fingerprint())
    std::cerr << "[mspst] warning: ASR config fingerprint differs from the MT checkpoint's\n";
  LoadParams(from_mt, assembly);

  AsrLossOptions opts;
  opts.use_cl = cfg.use_cl;
  opts.use_kd = cfg.use_kd;
  opts.include_positive = cfg.include_positive;

  internal::PhaseHooks hooks;
  hooks.n_train = corpus.asr_train.size();
  hooks.require_pairs = true;  // contrastive terms need in-batch negatives
  hooks.stop_metric = "dev_ctc";
  hooks.train_batch = [&, opts](const std::vector<size_t> &batch, uint64_t step, Rng &rng,
                                internal::StepMetrics *metrics) {
    std::vector<const AsrPair *> ptrs;
    ptrs.reserve(batch.size());
    for (size_t idx : batch) ptrs.push_back(&corpus.asr_train[idx]);
    LossBreakdown bd =
        AsrLoss(ptrs, assembly, cfg.tau, cfg.alpha, cfg.beta, step, /*train=*/true, rng, opts);
    // The schedule invariant: the beta actually used at optimizer step n is
    // exactly beta_at(n) whenever both contrastive terms are active.
    if (opts.use_cl && opts.use_kd)
      Check(bd.beta == BetaAt(step, cfg.beta),
            "pipeline: ASR loss used a beta that is not beta_at(step)");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    metrics->push_back({"ctc", bd.ctc * inv_b});
    metrics->push_back({"cl", bd.cl * inv_b});
    metrics->push_back({"cl_kd", bd.cl_kd * inv_b});
    metrics->push_back({"beta", bd.beta});
    metrics->push_back({"ctc_skipped", static_cast<double>(bd.ctc_skipped)});
    return Scale(bd.total_tensor, inv_b);
  };
  hooks.dev_eval = [&]() {
    AsrDevMetrics m = DevAsrMetrics(assembly, corpus.asr_dev);
    return internal::StepMetrics{{"dev_ctc", m.ctc},
                                 {"dev_crossmodal_cos", m.crossmodal_cos},
                                 {"dev_ctc_skipped", static_cast<double>(m.ctc_skipped)}};
  };
  return internal::RunPhaseLoop(cfg, Phase::kASR, assembly, hooks, log);
}

/// Step 3: loads the ASR checkpoint and fine-tunes the speech path plus the
/// decoder on (s, y).  The text encoder takes no part: it is absent from the
/// forward graph and excluded from the optimizer.
inline PhaseRunResult RunStStep(const PipelineConfig &cfg, const CorpusSplit &corpus,
                                const Checkpoint &from_asr, ModelAssembly &assembly,
                                MetricsLog &log) {
  Require(!corpus.st_train.empty(), "RunStStep: missing ST training split");
  Require(!corpus.st_dev.empty(), "RunStStep: missing ST dev split");
  RequirePhaseHandoff(from_asr, Phase::kST);
  if (from_asr.config_fingerprint != cfg.Fingerprint())
    std::cerr << "[mspst] warning: ST config fingerprint differs from the ASR checkpoint's\n";
  LoadParams(from_asr, assembly);

  internal::PhaseHooks hooks;
  hooks.n_train = corpus.st_train.size();
  hooks.require_pairs = false;
  hooks.stop_metric = "dev_nll";
  hooks.train_batch = [&](const std::vector<size_t> &batch, uint64_t /*step*/, Rng &rng,
                          internal::StepMetrics * /*metrics*/) {
    Tensor total;
    for (size_t i = 0; i < batch.size(); ++i) {
      const StPair &p = corpus.st_train[batch[i]];
      Tensor l = StSampleLoss(assembly, p.s, p.y, cfg.label_smoothing, /*train=*/true, rng);
      total = i == 0 ? l : Add(total, l);
    }
    return Scale(total, 1.0 / static_cast<double>(batch.size()));
  };
  hooks.dev_eval = [&]() {
    return internal::StepMetrics{{"dev_nll", DevStNll(assembly, corpus.st_dev)}};
  };
  return internal::RunPhaseLoop(cfg, Phase::kST, assembly, hooks, log);
}

// ---------------------------------------------------------------------------
// The full pipeline
// ---------------------------------------------------------------------------

struct PipelineResult {
  PhaseRunResult mt, asr, st;
  Checkpoint final_averaged;  // mean of the last ST checkpoints (the eval model)
};

/// Runs MT -> ASR -> ST end to end on one assembly, averages the trailing ST
/// checkpoints into the final model, and (when out_dir is set) writes the
/// metrics CSV, per-phase handoff checkpoints, and the averaged final one.
inline PipelineResult RunPipeline(const PipelineConfig &cfg, const CorpusSplit &corpus,
                                  MetricsLog &log) {
  cfg.Validate();
  ModelAssembly assembly(cfg.Vocabulary(), cfg.model, cfg.seed);

  PipelineResult res;
  res.mt = RunMtStep(cfg, corpus, assembly, log);
  res.asr = RunAsrStep(cfg, corpus, res.mt.best, assembly, log);
  res.st = RunStStep(cfg, corpus, res.asr.best, assembly, log);
  res.final_averaged = AverageCheckpoints(res.st.last_checkpoints);

  if (!cfg.out_dir.empty()) {
    const std::filesystem::path out(cfg.out_dir);
    log.WriteCsv(out / "metrics.csv");
    SaveCheckpoint(out / "mt.ckpt", res.mt.best);
    SaveCheckpoint(out / "asr.ckpt", res.asr.best);
    SaveCheckpoint(out / "st.ckpt", res.st.last_checkpoints.back());
    SaveCheckpoint(out / "final.ckpt", res.final_averaged);
  }
  return res;
}

}  // namespace mspst

#endif  // MSPST_PIPELINE_HPP_

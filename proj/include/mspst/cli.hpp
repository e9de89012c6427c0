// mspst/cli.hpp

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

// The command-line surface tying the repository together.  One binary, nine
// subcommands:
//
//   gen-data      draw the synthetic corpus and write it under data_dir
//   train-mt      step 1: denoising machine-translation pre-training
//   train-asr     step 2: CTC + contrastive speech pre-training
//   train-st      step 3: speech-translation fine-tuning
//   pipeline      all three steps end to end
//   decode        beam-decode a speech split with a trained checkpoint
//   evaluate      corpus BLEU between a hypothesis file and a reference file
//   analyze       similarity/entropy probes and the blank-ratio BLEU split
//   average-ckpt  elementwise mean of checkpoint files
//
// Every subcommand accepts `--config PATH` (a key = value file) plus any
// number of `--set key=value` overrides applied on top, in order.  Training
// subcommands also take `--no-cl`, `--no-kd` and `--no-sidae` as shorthand
// for the corresponding use_* settings, so ablations do not need their own
// config files.
//
// Exit codes: 0 on success, 2 for configuration/usage errors (unknown flag
// or subcommand, unknown or malformed setting, out-of-range value), 1 for
// runtime errors (missing or corrupt files, infeasible data).
//
// Output conventions: `decode` emits one hypothesis per line as
// space-separated token ids; `evaluate` prints a single line `BLEU=<float>`;
// `analyze` emits CSV rows `probe,metric,value`.  Commands that produce a
// report accept `--output PATH`, with `-` (the default) meaning stdout.
// Fixed config and seeds yield byte-identical output artifacts.

#ifndef MSPST_CLI_HPP_
#define MSPST_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mspst/analysis.hpp"
#include "mspst/bleu.hpp"
#include "mspst/checkpoint.hpp"
#include "mspst/config.hpp"
#include "mspst/data.hpp"
#include "mspst/decode.hpp"
#include "mspst/model.hpp"
#include "mspst/pipeline.hpp"

namespace mspst {
namespace internal {

/// Options shared by every subcommand.
struct CliCommon {
  std::string config_path;
  std::vector<std::string> sets;
  bool no_cl = false;
  bool no_kd = false;
  bool no_sidae = false;
};

inline void AddCommonOptions(CLI::App *cmd, CliCommon *common, bool with_ablations) {
  cmd->add_option("--config", common->config_path, "configuration file (key = value lines)")
      ->type_name("PATH");
  cmd->add_option("--set", common->sets, "override one setting on top of the config file")
      ->type_name("KEY=VALUE")
      ->type_size(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  if (with_ablations) {
    cmd->add_flag("--no-cl", common->no_cl, "disable the contrastive term (use_cl=false)");
    cmd->add_flag("--no-kd", common->no_kd,
                  "disable the self-decoded contrastive term (use_kd=false)");
    cmd->add_flag("--no-sidae", common->no_sidae,
                  "disable the denoising perturbation (use_sidae=false)");
  }
}

/// Defaults -> config file -> --set overrides -> ablation flags, validated.
inline PipelineConfig BuildConfig(const CliCommon &common) {
  PipelineConfig cfg;
  if (!common.config_path.empty()) LoadConfigFile(common.config_path, cfg);
  for (const std::string &kv : common.sets) ApplyConfigAssignment(cfg, kv);
  if (common.no_cl) cfg.use_cl = false;
  if (common.no_kd) cfg.use_kd = false;
  if (common.no_sidae) cfg.use_sidae = false;
  cfg.Validate();
  return cfg;
}

/// The corpus: read from data_dir when set, otherwise drawn in memory from
/// the data settings (either way fully determined by the config).
inline CorpusSplit ObtainCorpus(const PipelineConfig &cfg) {
  if (!cfg.data_dir.empty()) return ReadCorpus(cfg.data_dir);
  return GenCorpus(cfg.data, cfg.Vocabulary(), cfg.data_seed);
}

inline std::filesystem::path RequireOutDir(const PipelineConfig &cfg, const char *cmd) {
  if (cfg.out_dir.empty())
    throw ConfigError(std::string(cmd) + ": out_dir must be set (config file or --set out_dir=...)");
  std::filesystem::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

/// Writes `content` to `dest`, where "-" means stdout.  Files are opened in
/// binary mode so artifacts are byte-identical across platforms.
inline void WriteTextOutput(const std::string &dest, const std::string &content) {
  if (dest == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(dest, std::ios::binary);
  Check(out.good(), "cannot open output file " + dest);
  out << content;
  Check(out.good(), "write failed for " + dest);
}

/// Loads a checkpoint, defaulting to <out_dir>/<fallback> when no explicit
/// path was given, and warns when it was produced under different settings.
inline Checkpoint LoadCheckpointFor(const PipelineConfig &cfg, std::string path,
                                    const char *fallback, const char *cmd) {
  if (path.empty()) {
    if (cfg.out_dir.empty())
      throw ConfigError(std::string(cmd) + ": give --ckpt or set out_dir to locate " +
                        fallback);
    path = (std::filesystem::path(cfg.out_dir) / fallback).string();
  }
  Checkpoint ck = LoadCheckpoint(path);
  if (ck.config_fingerprint != cfg.Fingerprint())
    std::cerr << "[mspst] warning: checkpoint " << path
              << " was written under a different configuration\n";
  return ck;
}

// ---------------------------------------------------------------------------
// Subcommand bodies (each returns the process exit code)
// ---------------------------------------------------------------------------

inline int CmdGenData(const CliCommon &common) {
  PipelineConfig cfg = BuildConfig(common);
  if (cfg.data_dir.empty())
    throw ConfigError("gen-data: data_dir must be set (config file or --set data_dir=...)");
  CorpusSplit corpus = GenCorpus(cfg.data, cfg.Vocabulary(), cfg.data_seed);
  WriteCorpus(cfg.data_dir, corpus);
  std::cerr << "[mspst] wrote corpus to " << cfg.data_dir << "\n";
  return 0;
}

inline int CmdTrainMt(const CliCommon &common) {
  PipelineConfig cfg = BuildConfig(common);
  std::filesystem::path out = RequireOutDir(cfg, "train-mt");
  CorpusSplit corpus = ObtainCorpus(cfg);
  ModelAssembly assembly(cfg.Vocabulary(), cfg.model, cfg.seed);
  MetricsLog log;
  PhaseRunResult res = RunMtStep(cfg, corpus, assembly, log);
  log.WriteCsv(out / "metrics_mt.csv");
  SaveCheckpoint(out / "mt.ckpt", res.best);
  return 0;
}

inline int CmdTrainAsr(const CliCommon &common, const std::string &init_path) {
  PipelineConfig cfg = BuildConfig(common);
  std::filesystem::path out = RequireOutDir(cfg, "train-asr");
  Checkpoint from_mt = LoadCheckpointFor(cfg, init_path, "mt.ckpt", "train-asr");
  CorpusSplit corpus = ObtainCorpus(cfg);
  ModelAssembly assembly(cfg.Vocabulary(), cfg.model, cfg.seed);
  MetricsLog log;
  PhaseRunResult res = RunAsrStep(cfg, corpus, from_mt, assembly, log);
  log.WriteCsv(out / "metrics_asr.csv");
  SaveCheckpoint(out / "asr.ckpt", res.best);
  return 0;
}

inline int CmdTrainSt(const CliCommon &common, const std::string &init_path) {
  PipelineConfig cfg = BuildConfig(common);
  std::filesystem::path out = RequireOutDir(cfg, "train-st");
  Checkpoint from_asr = LoadCheckpointFor(cfg, init_path, "asr.ckpt", "train-st");
  CorpusSplit corpus = ObtainCorpus(cfg);
  ModelAssembly assembly(cfg.Vocabulary(), cfg.model, cfg.seed);
  MetricsLog log;
  PhaseRunResult res = RunStStep(cfg, corpus, from_asr, assembly, log);
  log.WriteCsv(out / "metrics_st.csv");
  SaveCheckpoint(out / "st.ckpt", res.last_checkpoints.back());
  SaveCheckpoint(out / "final.ckpt", AverageCheckpoints(res.last_checkpoints));
  return 0;
}

inline int CmdPipeline(const CliCommon &common) {
  PipelineConfig cfg = BuildConfig(common);
  RequireOutDir(cfg, "pipeline");
  CorpusSplit corpus = ObtainCorpus(cfg);
  MetricsLog log;
  RunPipeline(cfg, corpus, log);  // writes metrics.csv and the checkpoints itself
  return 0;
}

inline int CmdDecode(const CliCommon &common, const std::string &ckpt_path,
                     const std::string &split, const std::string &output) {
  PipelineConfig cfg = BuildConfig(common);
  Checkpoint ck = LoadCheckpointFor(cfg, ckpt_path, "final.ckpt", "decode");
  CorpusSplit corpus = ObtainCorpus(cfg);
  const std::vector<StPair> &rows = split == "st_dev" ? corpus.st_dev : corpus.st_test;
  Require(!rows.empty(), "decode: the requested split is empty");

  ModelAssembly assembly(cfg.Vocabulary(), cfg.model, cfg.seed);
  LoadParams(ck, assembly);
  std::ostringstream lines;
  for (const StPair &p : rows) {
    DecodeResult r = BeamSearch(assembly, p.s, cfg.beam, cfg.length_penalty, cfg.max_decode_len);
    for (size_t i = 0; i < r.tokens.size(); ++i) {
      if (i) lines << ' ';
      lines << r.tokens[i];
    }
    lines << '\n';
  }
  WriteTextOutput(output, lines.str());
  return 0;
}

inline int CmdEvaluate(const std::string &hyp_path, const std::string &ref_path) {
  std::vector<TokenSeq> hyps = ReadTokenFile(hyp_path);
  std::vector<TokenSeq> refs = ReadTokenFile(ref_path);
  std::cout << "BLEU=" << FormatDouble(CorpusBleu(hyps, refs)) << "\n";
  return 0;
}

inline int CmdAnalyze(const CliCommon &common, const std::string &ckpt_path,
                      double split_threshold, const std::string &output) {
  PipelineConfig cfg = BuildConfig(common);
  if (split_threshold < 0.0 || split_threshold > 1.0)
    throw ConfigError("analyze: --split-threshold must lie in [0, 1]");
  Checkpoint ck = LoadCheckpointFor(cfg, ckpt_path, "final.ckpt", "analyze");
  CorpusSplit corpus = ObtainCorpus(cfg);
  Require(!corpus.asr_test.empty(), "analyze: asr_test split is empty");
  Require(!corpus.st_test.empty(), "analyze: st_test split is empty");

  SharedVocab vocab = cfg.Vocabulary();
  ModelAssembly assembly(vocab, cfg.model, cfg.seed);
  LoadParams(ck, assembly);
  TargetMapping mapping(vocab, cfg.data.mapping_seed);

  std::ostringstream csv;
  csv << "probe,metric,value\n";

  // Per-sample probes over the ASR test split (it carries transcriptions,
  // which supply the probe tokens).  Cosines are averaged per token across
  // the samples where the token received frames; a token never assigned any
  // frame is reported as NA.
  std::map<size_t, std::pair<double, size_t>> modal_sum, lingual_sum;  // token -> (sum, n)
  std::set<size_t> probed;
  for (size_t i = 0; i < corpus.asr_test.size(); ++i) {
    const AsrPair &pair = corpus.asr_test[i];
    std::set<size_t> uniq(pair.t.begin(), pair.t.end());
    TokenSeq probes(uniq.begin(), uniq.end());
    AnalysisReport rep = AnalyzeSample(assembly, pair.s, probes, mapping, cfg.max_decode_len);
    csv << "sample" << i << ",blank_ratio," << FormatDouble(rep.blank_ratio) << "\n";
    csv << "sample" << i << ",self_attention_entropy,"
        << FormatDouble(rep.self_attention_entropy) << "\n";
    csv << "sample" << i << ",cross_attention_entropy,"
        << FormatDouble(rep.cross_attention_entropy) << "\n";
    for (const SimilarityProbe &p : rep.probes) {
      probed.insert(p.token);
      if (!p.present) continue;
      modal_sum[p.token].first += p.cross_modal;
      modal_sum[p.token].second += 1;
      lingual_sum[p.token].first += p.cross_lingual;
      lingual_sum[p.token].second += 1;
    }
  }
  for (size_t tok : probed) {
    auto emit = [&](const char *metric, const std::map<size_t, std::pair<double, size_t>> &acc) {
      csv << "token" << tok << "," << metric << ",";
      auto it = acc.find(tok);
      if (it == acc.end())
        csv << "NA";
      else
        csv << FormatDouble(it->second.first / static_cast<double>(it->second.second));
      csv << "\n";
    };
    emit("cross_modal", modal_sum);
    emit("cross_lingual", lingual_sum);
  }

  // Robustness split over the ST test set: decode everything, bucket the
  // samples by CTC blank ratio, and score BLEU per bucket.
  std::vector<double> ratios;
  std::vector<TokenSeq> hyps, refs;
  for (const StPair &p : corpus.st_test) {
    ratios.push_back(BlankRatio(assembly, p.s));
    hyps.push_back(
        BeamSearch(assembly, p.s, cfg.beam, cfg.length_penalty, cfg.max_decode_len).tokens);
    refs.push_back(p.y);
  }
  std::vector<size_t> low, high;
  SplitByBlankRatio(ratios, split_threshold, &low, &high);
  auto bucket = [&](const char *name, const std::vector<size_t> &idx) {
    csv << name << ",count," << idx.size() << "\n";
    csv << name << ",bleu,";
    if (idx.empty()) {
      csv << "NA\n";
      return;
    }
    std::vector<TokenSeq> h, r;
    for (size_t i : idx) {
      h.push_back(hyps[i]);
      r.push_back(refs[i]);
    }
    csv << FormatDouble(CorpusBleu(h, r)) << "\n";
  };
  bucket("low_blank", low);
  bucket("high_blank", high);

  WriteTextOutput(output, csv.str());
  return 0;
}

inline int CmdAverageCkpt(const std::vector<std::string> &inputs, const std::string &output) {
  std::vector<Checkpoint> cks;
  cks.reserve(inputs.size());
  for (const std::string &p : inputs) cks.push_back(LoadCheckpoint(p));
  SaveCheckpoint(output, AverageCheckpoints(cks));
  return 0;
}

}  // namespace internal

/// The whole command-line program; main() forwards here.  Never throws:
/// errors are printed to stderr and turned into the documented exit codes.
inline int RunCli(int argc, const char *const *argv) {
  CLI::App app{"multi-step pre-training for end-to-end speech translation (synthetic task)"};
  app.require_subcommand(1);

  internal::CliCommon common;
  std::string init_path, ckpt_path, hyp_path, ref_path;
  std::string split = "st_test", output = "-";
  std::string avg_output;
  std::vector<std::string> avg_inputs;
  double split_threshold = 0.3;

  CLI::App *gen = app.add_subcommand("gen-data", "draw the synthetic corpus into data_dir");
  internal::AddCommonOptions(gen, &common, false);

  CLI::App *mt = app.add_subcommand("train-mt", "step 1: denoising MT pre-training");
  internal::AddCommonOptions(mt, &common, true);

  CLI::App *asr = app.add_subcommand("train-asr", "step 2: CTC + contrastive pre-training");
  internal::AddCommonOptions(asr, &common, true);
  asr->add_option("--init", init_path, "step-1 checkpoint (default <out_dir>/mt.ckpt)")
      ->type_name("PATH");

  CLI::App *st = app.add_subcommand("train-st", "step 3: speech-translation fine-tuning");
  internal::AddCommonOptions(st, &common, true);
  st->add_option("--init", init_path, "step-2 checkpoint (default <out_dir>/asr.ckpt)")
      ->type_name("PATH");

  CLI::App *pipe = app.add_subcommand("pipeline", "run all three steps end to end");
  internal::AddCommonOptions(pipe, &common, true);

  CLI::App *dec = app.add_subcommand("decode", "beam-decode a speech split");
  internal::AddCommonOptions(dec, &common, false);
  dec->add_option("--ckpt", ckpt_path, "checkpoint to decode with (default <out_dir>/final.ckpt)")
      ->type_name("PATH");
  dec->add_option("--split", split, "which split to decode")
      ->check(CLI::IsMember({"st_test", "st_dev"}));
  dec->add_option("--output", output, "hypothesis file, - for stdout")->type_name("PATH");

  CLI::App *ev = app.add_subcommand("evaluate", "corpus BLEU of a hypothesis file");
  ev->add_option("--hyp", hyp_path, "hypothesis token file (one sequence per line)")
      ->type_name("PATH")
      ->required();
  ev->add_option("--ref", ref_path, "reference token file")->type_name("PATH")->required();

  CLI::App *ana = app.add_subcommand("analyze", "similarity/entropy probes and BLEU-by-noise split");
  internal::AddCommonOptions(ana, &common, false);
  ana->add_option("--ckpt", ckpt_path, "checkpoint to analyze (default <out_dir>/final.ckpt)")
      ->type_name("PATH");
  ana->add_option("--split-threshold", split_threshold,
                  "blank-ratio boundary between the low and high noise buckets");
  ana->add_option("--output", output, "CSV file, - for stdout")->type_name("PATH");

  CLI::App *avg = app.add_subcommand("average-ckpt", "average checkpoint files elementwise");
  avg->add_option("inputs", avg_inputs, "checkpoints to average")->required();
  avg->add_option("--output", avg_output, "where to write the averaged checkpoint")
      ->type_name("PATH")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError &e) {
    std::cerr << "mspst: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (app.got_subcommand(gen)) return internal::CmdGenData(common);
    if (app.got_subcommand(mt)) return internal::CmdTrainMt(common);
    if (app.got_subcommand(asr)) return internal::CmdTrainAsr(common, init_path);
    if (app.got_subcommand(st)) return internal::CmdTrainSt(common, init_path);
    if (app.got_subcommand(pipe)) return internal::CmdPipeline(common);
    if (app.got_subcommand(dec)) return internal::CmdDecode(common, ckpt_path, split, output);
    if (app.got_subcommand(ev)) return internal::CmdEvaluate(hyp_path, ref_path);
    if (app.got_subcommand(ana))
      return internal::CmdAnalyze(common, ckpt_path, split_threshold, output);
    if (app.got_subcommand(avg)) return internal::CmdAverageCkpt(avg_inputs, avg_output);
  } catch (const ConfigError &e) {
    std::cerr << "mspst: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "mspst: error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable: require_subcommand(1) guarantees a branch above
}

}  // namespace mspst

#endif  // MSPST_CLI_HPP_

// mspst/data.hpp

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

#ifndef MSPST_DATA_HPP_
#define MSPST_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mspst/common.hpp"
#include "mspst/rng.hpp"
#include "mspst/vocab.hpp"

namespace mspst {

// Synthetic task: sentence bodies are uniform draws over the content
// tokens, and every sentence closes with one uniformly drawn punctuation
// mark (the structural role punctuation plays in natural text, and the
// token MakeNoisyTest substitutes); the "translation" is a seeded token
// permutation composed with sequence reversal; speech is the per-token
// codebook vector repeated a random number of frames plus Gaussian noise.
// The repetition gives the long, locally redundant acoustic sequences whose
// length mismatch against text the alignment adapter exists to bridge.

/// Knobs of the synthetic corpus generator.
struct SyntheticTaskSpec {
  size_t vocab_size = 40;
  size_t min_len = 3;
  size_t max_len = 8;
  size_t frames_per_token_min = 9;   // kmin
  size_t frames_per_token_max = 15;  // kmax
  size_t feature_dim = 16;
  double noise_sigma = 0.1;
  uint64_t mapping_seed = 1234;  // defines the token permutation ("translation")
  size_t mt_train = 400, mt_dev = 40, mt_test = 40;
  size_t asr_train = 300, asr_dev = 40, asr_test = 40;
  size_t st_train = 120, st_dev = 40, st_test = 40;

  void Validate(const SharedVocab &vocab) const {
    Require(frames_per_token_min >= 1, "SyntheticTaskSpec: kmin must be >= 1");
    Require(frames_per_token_max >= frames_per_token_min, "SyntheticTaskSpec: kmax < kmin");
    Require(min_len >= 1 && max_len >= min_len, "SyntheticTaskSpec: bad length range");
    Require(vocab_size > vocab.first_content_id,
            "SyntheticTaskSpec: vocab must exceed the reserved symbols");
    Require(feature_dim > 0, "SyntheticTaskSpec: feature_dim must be positive");
  }
};

/// One underlying sentence in all four roles (s, t, x, y).  t == x by
/// construction in the synthetic task; both are carried so downstream code
/// keeps the role distinction.
struct Quadruple {
  SpeechSeq s;
  TokenSeq t;  // transcription
  TokenSeq x;  // source text
  TokenSeq y;  // target text
};

struct MtPair {
  TokenSeq x, y;
};
struct AsrPair {
  SpeechSeq s;
  TokenSeq t;
};
struct StPair {
  SpeechSeq s;
  TokenSeq y;
};

/// The task-typed corpus.  The pairing discipline is structural: an AsrPair
/// simply has no y to read, an MtPair no s.
struct CorpusSplit {
  std::vector<MtPair> mt_train, mt_dev, mt_test;
  std::vector<AsrPair> asr_train, asr_dev, asr_test;
  std::vector<StPair> st_train, st_dev, st_test;
};

/// The deterministic "translation": a seeded permutation of the drawable
/// token ids applied tokenwise, composed with sequence reversal.
class TargetMapping {
 public:
  TargetMapping(const SharedVocab &vocab, uint64_t mapping_seed) : vocab_(vocab) {
    size_t lo = vocab.first_content_id - vocab.punctuation_ids.size();  // first drawable id
    lo = vocab.punctuation_ids.empty() ? vocab.first_content_id
                                       : *std::min_element(vocab.punctuation_ids.begin(),
                                                           vocab.punctuation_ids.end());
    first_drawable_ = lo;
    size_t n = vocab.size - lo;
    perm_.resize(n);
    for (size_t i = 0; i < n; ++i) perm_[i] = i;
    Rng rng(DeriveSeed(mapping_seed, 0x7A96ULL));
    for (size_t i = n; i > 1; --i) std::swap(perm_[i - 1], perm_[rng.UniformInt(i)]);
  }

  size_t MapToken(size_t tok) const {
    Require(tok >= first_drawable_ && tok < vocab_.size, "TargetMapping: undrawable token");
    return first_drawable_ + perm_[tok - first_drawable_];
  }

  TokenSeq Apply(const TokenSeq &x) const {
    TokenSeq y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = MapToken(x[x.size() - 1 - i]);
    return y;
  }

 private:
  SharedVocab vocab_;
  size_t first_drawable_ = 0;
  std::vector<size_t> perm_;
};

/// Per-token feature codebook: one Gaussian vector per vocabulary id.
class SpeechCodebook {
 public:
  SpeechCodebook(size_t vocab_size, size_t feature_dim, uint64_t seed) : dim_(feature_dim) {
    Rng rng(DeriveSeed(seed, 0xC0DEULL));
    table_.resize(vocab_size * feature_dim);
    for (double &x : table_) x = rng.Normal();
  }

  size_t Dim() const { return dim_; }
  const double *Row(size_t tok) const { return &table_[tok * dim_]; }

 private:
  size_t dim_;
  std::vector<double> table_;
};

/// Synthesizes speech for a transcription: each token contributes its
/// codebook vector repeated k ~ U[kmin, kmax] times, plus N(0, sigma) noise.
/// |s| == sum of the k_i by construction.
inline SpeechSeq SynthesizeSpeech(const TokenSeq &t, const SpeechCodebook &codebook,
                                  const SyntheticTaskSpec &spec, Rng &rng) {
  SpeechSeq s;
  s.dim = codebook.Dim();
  for (size_t tok : t) {
    size_t k = spec.frames_per_token_min +
               rng.UniformInt(spec.frames_per_token_max - spec.frames_per_token_min + 1);
    for (size_t rep = 0; rep < k; ++rep)
      for (size_t d = 0; d < s.dim; ++d)
        s.data.push_back(codebook.Row(tok)[d] + rng.Normal(0.0, spec.noise_sigma));
  }
  return s;
}

/// Inserts exactly round-half-up(r * |x|) blank symbols at uniformly random
/// gap positions (both ends allowed, several blanks may share a gap).  This
/// is the denoising perturbation g(.); removing blanks recovers x exactly.
inline TokenSeq BlankPerturb(const TokenSeq &x, double r, const SharedVocab &vocab, Rng &rng) {
  Require(r >= 0.0, "BlankPerturb: r must be nonnegative");
  for (size_t tok : x) Require(tok != vocab.blank_id, "BlankPerturb: input already has blanks");
  size_t count = static_cast<size_t>(std::floor(r * static_cast<double>(x.size()) + 0.5));
  if (count == 0) return x;
  // Draw a gap in [0, |x|] for each blank; gap i precedes token i.
  std::vector<size_t> per_gap(x.size() + 1, 0);
  for (size_t c = 0; c < count; ++c) per_gap[rng.UniformInt(x.size() + 1)] += 1;
  TokenSeq out;
  out.reserve(x.size() + count);
  for (size_t i = 0; i <= x.size(); ++i) {
    out.insert(out.end(), per_gap[i], vocab.blank_id);
    if (i < x.size()) out.push_back(x[i]);
  }
  return out;
}

/// Replaces every punctuation token with blank, in place positionally; this
/// is how the noisy evaluation set is constructed.
inline TokenSeq MakeNoisyTest(const TokenSeq &x, const SharedVocab &vocab) {
  TokenSeq out = x;
  for (size_t &tok : out)
    if (vocab.IsPunctuation(tok)) tok = vocab.blank_id;
  return out;
}

/// Partitions indices by blank ratio: entries with ratio strictly greater
/// than the threshold go to `high`, the rest (boundary included) to `low`.
inline void SplitByBlankRatio(const std::vector<double> &ratios, double threshold,
                              std::vector<size_t> *low, std::vector<size_t> *high) {
  low->clear();
  high->clear();
  for (size_t i = 0; i < ratios.size(); ++i) {
    Require(ratios[i] >= 0.0 && ratios[i] <= 1.0, "SplitByBlankRatio: ratio out of [0,1]");
    (ratios[i] > threshold ? high : low)->push_back(i);
  }
}

namespace internal {

/// Draws a sentence unseen so far (the `used` set keeps the task splits
/// disjoint by underlying sentence).  The body is a uniform draw over the
/// content tokens; the final position is one uniformly drawn punctuation
/// mark, so punctuation sits where natural text puts it and MakeNoisyTest
/// substitutes a structurally predictable token rather than a random one.
/// Total length (mark included) stays within [min_len, max_len].
inline TokenSeq DrawSentence(const SyntheticTaskSpec &spec, const SharedVocab &vocab, Rng &rng,
                             std::set<TokenSeq> *used) {
  const std::vector<size_t> &punct = vocab.punctuation_ids;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    size_t len = spec.min_len + rng.UniformInt(spec.max_len - spec.min_len + 1);
    size_t body = punct.empty() ? len : len - 1;
    TokenSeq t;
    t.reserve(len);
    for (size_t i = 0; i < body; ++i)
      t.push_back(vocab.first_content_id +
                  rng.UniformInt(spec.vocab_size - vocab.first_content_id));
    if (!punct.empty()) t.push_back(punct[rng.UniformInt(punct.size())]);
    if (used->insert(t).second) return t;
  }
  throw std::runtime_error("DrawSentence: sentence space exhausted; enlarge vocab or lengths");
}

inline Quadruple MakeQuadruple(const TokenSeq &sentence, const TargetMapping &mapping,
                               const SpeechCodebook &codebook, const SyntheticTaskSpec &spec,
                               Rng &rng) {
  Quadruple q;
  q.t = sentence;
  q.x = sentence;  // transcription equals source text in the synthetic task
  q.y = mapping.Apply(q.x);
  q.s = SynthesizeSpeech(q.t, codebook, spec, rng);
  return q;
}

}  // namespace internal

/// Generates the full task-typed corpus; a pure function of (spec, seed).
/// Sentences never repeat across sections, and each section only exposes
/// the fields its task is allowed to see.
inline CorpusSplit GenCorpus(const SyntheticTaskSpec &spec, const SharedVocab &vocab,
                             uint64_t seed) {
  spec.Validate(vocab);
  vocab.Validate();
  Require(spec.vocab_size == vocab.size, "GenCorpus: spec/vocab size mismatch");
  TargetMapping mapping(vocab, spec.mapping_seed);
  SpeechCodebook codebook(vocab.size, spec.feature_dim, seed);
  std::set<TokenSeq> used;
  CorpusSplit out;

  Rng rng(DeriveSeed(seed, 0xDA7AULL));
  auto fill_mt = [&](std::vector<MtPair> *dst, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      Quadruple q = internal::MakeQuadruple(internal::DrawSentence(spec, vocab, rng, &used),
                                            mapping, codebook, spec, rng);
      dst->push_back(MtPair{std::move(q.x), std::move(q.y)});
    }
  };
  auto fill_asr = [&](std::vector<AsrPair> *dst, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      Quadruple q = internal::MakeQuadruple(internal::DrawSentence(spec, vocab, rng, &used),
                                            mapping, codebook, spec, rng);
      dst->push_back(AsrPair{std::move(q.s), std::move(q.t)});
    }
  };
  auto fill_st = [&](std::vector<StPair> *dst, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      Quadruple q = internal::MakeQuadruple(internal::DrawSentence(spec, vocab, rng, &used),
                                            mapping, codebook, spec, rng);
      dst->push_back(StPair{std::move(q.s), std::move(q.y)});
    }
  };
  fill_mt(&out.mt_train, spec.mt_train);
  fill_mt(&out.mt_dev, spec.mt_dev);
  fill_mt(&out.mt_test, spec.mt_test);
  fill_asr(&out.asr_train, spec.asr_train);
  fill_asr(&out.asr_dev, spec.asr_dev);
  fill_asr(&out.asr_test, spec.asr_test);
  fill_st(&out.st_train, spec.st_train);
  fill_st(&out.st_dev, spec.st_dev);
  fill_st(&out.st_test, spec.st_test);
  return out;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

/// Seeded epoch batching: shuffles [0, n) and chunks it.  Every index
/// appears exactly once.  With require_pairs (contrastive phases), a
/// trailing singleton is merged into the previous batch so no batch of
/// size 1 is ever emitted; batch_size must then be at least 2.
inline std::vector<std::vector<size_t>> MakeBatches(size_t n, size_t batch_size, uint64_t seed,
                                                    bool require_pairs = false) {
  Require(batch_size >= 1, "MakeBatches: batch_size must be positive");
  if (require_pairs) {
    Require(batch_size >= 2, "MakeBatches: contrastive batches need batch_size >= 2");
    Require(n >= 2, "MakeBatches: contrastive batching needs at least 2 samples");
  }
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.UniformInt(i)]);
  std::vector<std::vector<size_t>> batches;
  for (size_t at = 0; at < n; at += batch_size) {
    size_t end = std::min(n, at + batch_size);
    batches.emplace_back(order.begin() + at, order.begin() + end);
  }
  if (require_pairs && batches.size() >= 2 && batches.back().size() < 2) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

/// Padded token batch with 0/1 validity masks (the external batch form).
struct PaddedTokenBatch {
  size_t batch = 0, max_len = 0;
  std::vector<size_t> ids;    // [batch x max_len], pad_id in the padding
  std::vector<double> mask;   // [batch x max_len], 1 = real token
};

inline PaddedTokenBatch PadTokenBatch(const std::vector<TokenSeq> &seqs, size_t pad_id) {
  PaddedTokenBatch out;
  out.batch = seqs.size();
  for (const TokenSeq &s : seqs) out.max_len = std::max(out.max_len, s.size());
  out.ids.assign(out.batch * out.max_len, pad_id);
  out.mask.assign(out.batch * out.max_len, 0.0);
  for (size_t i = 0; i < out.batch; ++i)
    for (size_t j = 0; j < seqs[i].size(); ++j) {
      out.ids[i * out.max_len + j] = seqs[i][j];
      out.mask[i * out.max_len + j] = 1.0;
    }
  return out;
}

/// Padded speech batch: zero frames in the padding, 0/1 frame masks.
struct PaddedSpeechBatch {
  size_t batch = 0, max_frames = 0, dim = 0;
  std::vector<double> frames;  // [batch x max_frames x dim]
  std::vector<double> mask;    // [batch x max_frames]
};

inline PaddedSpeechBatch PadSpeechBatch(const std::vector<const SpeechSeq *> &seqs) {
  PaddedSpeechBatch out;
  out.batch = seqs.size();
  for (const SpeechSeq *s : seqs) {
    Require(s != nullptr && s->dim > 0, "PadSpeechBatch: empty speech");
    Require(out.dim == 0 || out.dim == s->dim, "PadSpeechBatch: dim mismatch");
    out.dim = s->dim;
    out.max_frames = std::max(out.max_frames, s->Frames());
  }
  out.frames.assign(out.batch * out.max_frames * out.dim, 0.0);
  out.mask.assign(out.batch * out.max_frames, 0.0);
  for (size_t i = 0; i < out.batch; ++i) {
    for (size_t f = 0; f < seqs[i]->Frames(); ++f) {
      out.mask[i * out.max_frames + f] = 1.0;
      for (size_t d = 0; d < out.dim; ++d)
        out.frames[(i * out.max_frames + f) * out.dim + d] = seqs[i]->At(f, d);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus serialization (bit-exact round trip)
// ---------------------------------------------------------------------------
//
// Layout under a directory:
//   manifest.txt            one "<section> <kind> <filename>" triple per line
//   <sec>.src.tok/.tgt.tok  MT token files, one sample per line
//   <sec>.t.tok/.y.tok      ASR / ST token files
//   <sec>.speech.bin        concatenated little-endian 64-bit floats
//   <sec>.speech.idx        "<offset-in-doubles> <frames> <dim>" per sample

namespace internal {

static_assert(sizeof(double) == 8, "corpus serialization assumes 8-byte doubles");

inline void WriteTokenFile(const std::filesystem::path &path,
                           const std::vector<const TokenSeq *> &rows) {
  std::ofstream out(path);
  Check(out.good(), "WriteTokenFile: cannot open " + path.string());
  for (const TokenSeq *row : rows) {
    for (size_t i = 0; i < row->size(); ++i) {
      if (i) out << ' ';
      out << (*row)[i];
    }
    out << '\n';
  }
  Check(out.good(), "WriteTokenFile: write failed for " + path.string());
}

inline std::vector<TokenSeq> ReadTokenFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  Check(in.good(), "ReadTokenFile: cannot open " + path.string());
  std::vector<TokenSeq> rows;
  std::string line;
  while (std::getline(in, line)) {
    TokenSeq row;
    size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && line[pos] == ' ') ++pos;
      if (pos >= line.size()) break;
      size_t end = line.find(' ', pos);
      if (end == std::string::npos) end = line.size();
      row.push_back(static_cast<size_t>(std::stoull(line.substr(pos, end - pos))));
      pos = end;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void WriteSpeechFiles(const std::filesystem::path &bin_path,
                             const std::filesystem::path &idx_path,
                             const std::vector<const SpeechSeq *> &rows) {
  std::ofstream bin(bin_path, std::ios::binary);
  std::ofstream idx(idx_path);
  Check(bin.good() && idx.good(), "WriteSpeechFiles: cannot open outputs");
  size_t offset = 0;
  for (const SpeechSeq *s : rows) {
    bin.write(reinterpret_cast<const char *>(s->data.data()),
              static_cast<std::streamsize>(s->data.size() * sizeof(double)));
    idx << offset << ' ' << s->Frames() << ' ' << s->dim << '\n';
    offset += s->data.size();
  }
  Check(bin.good() && idx.good(), "WriteSpeechFiles: write failed");
}

inline std::vector<SpeechSeq> ReadSpeechFiles(const std::filesystem::path &bin_path,
                                              const std::filesystem::path &idx_path) {
  std::ifstream bin(bin_path, std::ios::binary);
  std::ifstream idx(idx_path);
  Check(bin.good() && idx.good(), "ReadSpeechFiles: cannot open inputs");
  std::vector<SpeechSeq> rows;
  size_t offset = 0, frames = 0, dim = 0;
  while (idx >> offset >> frames >> dim) {
    SpeechSeq s;
    s.dim = dim;
    s.data.resize(frames * dim);
    bin.seekg(static_cast<std::streamoff>(offset * sizeof(double)));
    bin.read(reinterpret_cast<char *>(s.data.data()),
             static_cast<std::streamsize>(s.data.size() * sizeof(double)));
    Check(bin.good(), "ReadSpeechFiles: truncated speech data");
    rows.push_back(std::move(s));
  }
  return rows;
}

}  // namespace internal

inline void WriteCorpus(const std::filesystem::path &dir, const CorpusSplit &corpus) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  Check(manifest.good(), "WriteCorpus: cannot open manifest");

  auto mt_section = [&](const char *sec, const std::vector<MtPair> &rows) {
    std::vector<const TokenSeq *> xs, ys;
    for (const MtPair &p : rows) {
      xs.push_back(&p.x);
      ys.push_back(&p.y);
    }
    std::string src = std::string(sec) + ".src.tok", tgt = std::string(sec) + ".tgt.tok";
    internal::WriteTokenFile(dir / src, xs);
    internal::WriteTokenFile(dir / tgt, ys);
    manifest << sec << " src " << src << '\n' << sec << " tgt " << tgt << '\n';
  };
  auto asr_section = [&](const char *sec, const std::vector<AsrPair> &rows) {
    std::vector<const SpeechSeq *> ss;
    std::vector<const TokenSeq *> ts;
    for (const AsrPair &p : rows) {
      ss.push_back(&p.s);
      ts.push_back(&p.t);
    }
    std::string bin = std::string(sec) + ".speech.bin", idx = std::string(sec) + ".speech.idx",
                tok = std::string(sec) + ".t.tok";
    internal::WriteSpeechFiles(dir / bin, dir / idx, ss);
    internal::WriteTokenFile(dir / tok, ts);
    manifest << sec << " speech_bin " << bin << '\n'
             << sec << " speech_idx " << idx << '\n'
             << sec << " t " << tok << '\n';
  };
  auto st_section = [&](const char *sec, const std::vector<StPair> &rows) {
    std::vector<const SpeechSeq *> ss;
    std::vector<const TokenSeq *> ys;
    for (const StPair &p : rows) {
      ss.push_back(&p.s);
      ys.push_back(&p.y);
    }
    std::string bin = std::string(sec) + ".speech.bin", idx = std::string(sec) + ".speech.idx",
                tok = std::string(sec) + ".y.tok";
    internal::WriteSpeechFiles(dir / bin, dir / idx, ss);
    internal::WriteTokenFile(dir / tok, ys);
    manifest << sec << " speech_bin " << bin << '\n'
             << sec << " speech_idx " << idx << '\n'
             << sec << " y " << tok << '\n';
  };

  mt_section("mt_train", corpus.mt_train);
  mt_section("mt_dev", corpus.mt_dev);
  mt_section("mt_test", corpus.mt_test);
  asr_section("asr_train", corpus.asr_train);
  asr_section("asr_dev", corpus.asr_dev);
  asr_section("asr_test", corpus.asr_test);
  st_section("st_train", corpus.st_train);
  st_section("st_dev", corpus.st_dev);
  st_section("st_test", corpus.st_test);
  Check(manifest.good(), "WriteCorpus: manifest write failed");
}

inline CorpusSplit ReadCorpus(const std::filesystem::path &dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(dir / "manifest.txt");
  Check(manifest.good(), "ReadCorpus: cannot open manifest in " + dir.string());
  std::map<std::pair<std::string, std::string>, std::string> files;
  std::string sec, kind, name;
  while (manifest >> sec >> kind >> name) files[{sec, kind}] = name;

  auto path_of = [&](const std::string &s, const std::string &k) {
    auto it = files.find({s, k});
    Check(it != files.end(), "ReadCorpus: manifest missing " + s + " " + k);
    return dir / it->second;
  };
  CorpusSplit out;
  auto mt_section = [&](const char *s, std::vector<MtPair> *dst) {
    std::vector<TokenSeq> xs = internal::ReadTokenFile(path_of(s, "src"));
    std::vector<TokenSeq> ys = internal::ReadTokenFile(path_of(s, "tgt"));
    Check(xs.size() == ys.size(), "ReadCorpus: src/tgt length mismatch in " + std::string(s));
    for (size_t i = 0; i < xs.size(); ++i)
      dst->push_back(MtPair{std::move(xs[i]), std::move(ys[i])});
  };
  auto asr_section = [&](const char *s, std::vector<AsrPair> *dst) {
    std::vector<SpeechSeq> ss =
        internal::ReadSpeechFiles(path_of(s, "speech_bin"), path_of(s, "speech_idx"));
    std::vector<TokenSeq> ts = internal::ReadTokenFile(path_of(s, "t"));
    Check(ss.size() == ts.size(), "ReadCorpus: speech/text length mismatch in " + std::string(s));
    for (size_t i = 0; i < ss.size(); ++i)
      dst->push_back(AsrPair{std::move(ss[i]), std::move(ts[i])});
  };
  auto st_section = [&](const char *s, std::vector<StPair> *dst) {
    std::vector<SpeechSeq> ss =
        internal::ReadSpeechFiles(path_of(s, "speech_bin"), path_of(s, "speech_idx"));
    std::vector<TokenSeq> ys = internal::ReadTokenFile(path_of(s, "y"));
    Check(ss.size() == ys.size(), "ReadCorpus: speech/text length mismatch in " + std::string(s));
    for (size_t i = 0; i < ss.size(); ++i)
      dst->push_back(StPair{std::move(ss[i]), std::move(ys[i])});
  };
  mt_section("mt_train", &out.mt_train);
  mt_section("mt_dev", &out.mt_dev);
  mt_section("mt_test", &out.mt_test);
  asr_section("asr_train", &out.asr_train);
  asr_section("asr_dev", &out.asr_dev);
  asr_section("asr_test", &out.asr_test);
  st_section("st_train", &out.st_train);
  st_section("st_dev", &out.st_dev);
  st_section("st_test", &out.st_test);
  return out;
}

}  // namespace mspst

#endif  // MSPST_DATA_HPP_

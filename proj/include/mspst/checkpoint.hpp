// mspst/checkpoint.hpp

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

// Checkpoints: a snapshot of every named parameter tensor plus enough
// metadata to know where it came from (phase, step, config fingerprint) and
// whether it may seed the next phase.
//
// On disk a checkpoint is a little-endian binary container:
//
//   magic "MSPST" | version u32 | phase u32 | step u64 | fingerprint u64
//   | param count u64
//   | { name_len u32 | name bytes | rank u32 | dims u64[rank] | f64 payload }*
//   | has_optimizer u8
//   | { name_len u32 | name bytes | step u64 | n u64 | m f64[n] | v f64[n] }*
//
// All multi-byte values are written byte-by-byte in little-endian order, so
// files are identical across hosts.  Doubles travel as their IEEE-754 bit
// patterns: save -> load -> save reproduces the original file byte for byte.
//
// The three training phases form a fixed ladder (MT -> ASR -> ST).  A phase
// only accepts a checkpoint produced by its immediate predecessor;
// RequirePhaseHandoff enforces that rule in one place.

#ifndef MSPST_CHECKPOINT_HPP_
#define MSPST_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mspst/adam.hpp"
#include "mspst/common.hpp"
#include "mspst/model.hpp"
#include "mspst/tensor.hpp"

namespace mspst {

inline constexpr char kCheckpointMagic[5] = {'M', 'S', 'P', 'S', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

/// One named parameter tensor, detached from the graph.
struct ParamEntry {
  std::vector<size_t> dims;
  std::vector<double> values;
};

/// A full model snapshot.  `optimizer` is optional (empty = absent) and is
/// dropped by checkpoint averaging; per-epoch snapshots do not carry it
/// either, since training never resumes mid-phase.
struct Checkpoint {
  uint32_t version = kCheckpointVersion;
  Phase phase = Phase::kMT;
  uint64_t step = 0;               // optimizer steps completed in the producing phase
  uint64_t config_fingerprint = 0; // PipelineConfig::Fingerprint() of the producing run
  std::map<std::string, ParamEntry> params;
  std::map<std::string, AdamState> optimizer;
};

namespace internal {

inline void WriteLe(std::ostream &os, uint64_t v, int nbytes) {
  char b[8];
  for (int i = 0; i < nbytes; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, nbytes);
}

inline uint64_t ReadLe(std::istream &is, int nbytes) {
  unsigned char b[8] = {0};
  is.read(reinterpret_cast<char *>(b), nbytes);
  Check(is.gcount() == nbytes, "checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void WriteF64(std::ostream &os, double d) {
  WriteLe(os, std::bit_cast<uint64_t>(d), 8);
}

inline double ReadF64(std::istream &is) { return std::bit_cast<double>(ReadLe(is, 8)); }

inline void WriteName(std::ostream &os, const std::string &name) {
  WriteLe(os, name.size(), 4);
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
}

inline std::string ReadName(std::istream &is) {
  size_t n = static_cast<size_t>(ReadLe(is, 4));
  Check(n <= 4096, "checkpoint: implausible name length");
  std::string name(n, '\0');
  is.read(name.data(), static_cast<std::streamsize>(n));
  Check(static_cast<size_t>(is.gcount()) == n, "checkpoint: truncated file");
  return name;
}

}  // namespace internal

/// Snapshots the assembly's parameters (and optionally optimizer state) into
/// a detached checkpoint.
inline Checkpoint MakeCheckpoint(const ModelAssembly &assembly, Phase phase, uint64_t step,
                                 uint64_t config_fingerprint,
                                 const std::map<std::string, AdamState> *optimizer = nullptr) {
  Checkpoint ck;
  ck.phase = phase;
  ck.step = step;
  ck.config_fingerprint = config_fingerprint;
  for (const auto &kv : assembly.NamedParams())
    ck.params[kv.first] = ParamEntry{kv.second.Dims(), kv.second.Node()->value};
  if (optimizer != nullptr) ck.optimizer = *optimizer;
  return ck;
}

/// Copies checkpoint parameters into the live assembly.  The name sets and
/// every shape must match exactly; a partial load would silently mix two
/// models, so any mismatch is an error.
inline void LoadParams(const Checkpoint &ck, ModelAssembly &assembly) {
  ParamMap params = assembly.NamedParams();
  Check(params.size() == ck.params.size(),
        "checkpoint: parameter count mismatch (file has " + std::to_string(ck.params.size()) +
            ", model has " + std::to_string(params.size()) + ")");
  for (auto &kv : params) {
    auto it = ck.params.find(kv.first);
    Check(it != ck.params.end(), "checkpoint: missing parameter '" + kv.first + "'");
    Check(it->second.dims == kv.second.Dims(),
          "checkpoint: shape mismatch for parameter '" + kv.first + "'");
    kv.second.Node()->value = it->second.values;
  }
}

inline void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &ck) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  Check(os.good(), "checkpoint: cannot open '" + path.string() + "' for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  internal::WriteLe(os, ck.version, 4);
  internal::WriteLe(os, static_cast<uint32_t>(ck.phase), 4);
  internal::WriteLe(os, ck.step, 8);
  internal::WriteLe(os, ck.config_fingerprint, 8);
  internal::WriteLe(os, ck.params.size(), 8);
  for (const auto &kv : ck.params) {
    internal::WriteName(os, kv.first);
    internal::WriteLe(os, kv.second.dims.size(), 4);
    size_t n = 1;
    for (size_t d : kv.second.dims) {
      internal::WriteLe(os, d, 8);
      n *= d;
    }
    Check(n == kv.second.values.size(), "checkpoint: dims/payload mismatch in '" + kv.first + "'");
    for (double d : kv.second.values) internal::WriteF64(os, d);
  }
  internal::WriteLe(os, ck.optimizer.empty() ? 0 : 1, 1);
  if (!ck.optimizer.empty()) {
    internal::WriteLe(os, ck.optimizer.size(), 8);
    for (const auto &kv : ck.optimizer) {
      internal::WriteName(os, kv.first);
      internal::WriteLe(os, kv.second.step, 8);
      Check(kv.second.m.size() == kv.second.v.size(), "checkpoint: optimizer moment mismatch");
      internal::WriteLe(os, kv.second.m.size(), 8);
      for (double d : kv.second.m) internal::WriteF64(os, d);
      for (double d : kv.second.v) internal::WriteF64(os, d);
    }
  }
  Check(os.good(), "checkpoint: write to '" + path.string() + "' failed");
}

inline Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  Check(is.good(), "checkpoint: cannot open '" + path.string() + "'");
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  Check(is.gcount() == sizeof(magic) && std::equal(magic, magic + sizeof(magic), kCheckpointMagic),
        "checkpoint: bad magic in '" + path.string() + "'");
  Checkpoint ck;
  ck.version = static_cast<uint32_t>(internal::ReadLe(is, 4));
  Check(ck.version == kCheckpointVersion,
        "checkpoint: unsupported format version " + std::to_string(ck.version));
  uint32_t phase = static_cast<uint32_t>(internal::ReadLe(is, 4));
  Check(phase >= 1 && phase <= 3, "checkpoint: invalid phase tag " + std::to_string(phase));
  ck.phase = static_cast<Phase>(phase);
  ck.step = internal::ReadLe(is, 8);
  ck.config_fingerprint = internal::ReadLe(is, 8);
  uint64_t n_params = internal::ReadLe(is, 8);
  for (uint64_t i = 0; i < n_params; ++i) {
    std::string name = internal::ReadName(is);
    ParamEntry e;
    uint32_t rank = static_cast<uint32_t>(internal::ReadLe(is, 4));
    Check(rank <= 8, "checkpoint: implausible rank in '" + name + "'");
    size_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      e.dims.push_back(static_cast<size_t>(internal::ReadLe(is, 8)));
      n *= e.dims.back();
    }
    e.values.resize(n);
    for (size_t j = 0; j < n; ++j) e.values[j] = internal::ReadF64(is);
    ck.params[name] = std::move(e);
  }
  if (internal::ReadLe(is, 1) != 0) {
    uint64_t n_opt = internal::ReadLe(is, 8);
    for (uint64_t i = 0; i < n_opt; ++i) {
      std::string name = internal::ReadName(is);
      AdamState st;
      st.step = internal::ReadLe(is, 8);
      uint64_t n = internal::ReadLe(is, 8);
      st.m.resize(n);
      st.v.resize(n);
      for (uint64_t j = 0; j < n; ++j) st.m[j] = internal::ReadF64(is);
      for (uint64_t j = 0; j < n; ++j) st.v[j] = internal::ReadF64(is);
      ck.optimizer[name] = std::move(st);
    }
  }
  return ck;
}

/// The phase whose checkpoint is required to start `phase`.
inline Phase RequiredPredecessor(Phase phase) {
  switch (phase) {
    case Phase::kASR:
      return Phase::kMT;
    case Phase::kST:
      return Phase::kASR;
    default:
      throw std::invalid_argument("RequiredPredecessor: the MT phase starts from scratch");
  }
}

/// Enforces the MT -> ASR -> ST ladder: `from` must be the immediate
/// predecessor of `target`.
inline void RequirePhaseHandoff(const Checkpoint &from, Phase target) {
  Phase want = RequiredPredecessor(target);
  Check(from.phase == want,
        std::string("checkpoint: ") + PhaseName(target) + " training requires a " +
            PhaseName(want) + " checkpoint, got " + PhaseName(from.phase));
}

/// Elementwise arithmetic mean of the parameter sets; name sets and shapes
/// must agree across all inputs.  Metadata (phase, step, fingerprint) is
/// taken from the newest (last) checkpoint, and optimizer state is dropped —
/// averaged moments belong to no trajectory.
inline Checkpoint AverageCheckpoints(const std::vector<Checkpoint> &cks) {
  Require(!cks.empty(), "AverageCheckpoints: at least one checkpoint required");
  Checkpoint out;
  out.phase = cks.back().phase;
  out.step = cks.back().step;
  out.config_fingerprint = cks.back().config_fingerprint;
  out.params = cks.front().params;
  for (size_t i = 1; i < cks.size(); ++i)
    Require(cks[i].params.size() == out.params.size(),
            "AverageCheckpoints: parameter name sets differ");
  const double scale = 1.0 / static_cast<double>(cks.size());
  for (auto &kv : out.params) {
    std::vector<double> &acc = kv.second.values;
    for (size_t i = 1; i < cks.size(); ++i) {
      auto it = cks[i].params.find(kv.first);
      Require(it != cks[i].params.end(),
              "AverageCheckpoints: parameter '" + kv.first + "' missing from input " +
                  std::to_string(i));
      Require(it->second.dims == kv.second.dims,
              "AverageCheckpoints: shape mismatch for '" + kv.first + "'");
      for (size_t j = 0; j < acc.size(); ++j) acc[j] += it->second.values[j];
    }
    for (double &x : acc) x *= scale;
  }
  return out;
}

}  // namespace mspst

#endif  // MSPST_CHECKPOINT_HPP_

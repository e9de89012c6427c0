// mspst/vocab.hpp

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

#ifndef MSPST_VOCAB_HPP_
#define MSPST_VOCAB_HPP_

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mspst/common.hpp"

namespace mspst {

/// Integer token sequence over the shared vocabulary.  Depending on context
/// it plays the transcription (t), source-text (x), or target-text (y) role.
using TokenSeq = std::vector<size_t>;

/// Frame sequence of real-valued feature vectors standing in for the
/// acoustic signal s; row-major [frames x dim].
struct SpeechSeq {
  size_t dim = 0;
  std::vector<double> data;

  size_t Frames() const { return dim == 0 ? 0 : data.size() / dim; }
  double At(size_t frame, size_t d) const { return data[frame * dim + d]; }
};

/// The one vocabulary shared by every block: token embedding, text-encoder
/// input, CTC output projection, and decoder output projection all index
/// into the same id space, which contains a distinguished blank symbol
/// (the CTC non-emission token doubling as the denoising noise symbol).
struct SharedVocab {
  size_t size = 0;  // V
  size_t pad_id = 0;
  size_t bos_id = 1;
  size_t eos_id = 2;
  size_t blank_id = 3;
  std::vector<size_t> punctuation_ids{4, 5, 6};
  size_t first_content_id = 7;

  void Validate() const {
    Require(size > first_content_id, "SharedVocab: no room for content tokens");
    Require(blank_id != pad_id && blank_id != bos_id && blank_id != eos_id,
            "SharedVocab: blank must be distinct from pad/bos/eos");
    Require(pad_id < size && bos_id < size && eos_id < size && blank_id < size,
            "SharedVocab: reserved id out of range");
    for (size_t p : punctuation_ids) {
      Require(p < size, "SharedVocab: punctuation id out of range");
      Require(p != blank_id && p != pad_id && p != bos_id && p != eos_id,
              "SharedVocab: punctuation overlaps a reserved id");
    }
  }

  bool IsPunctuation(size_t id) const {
    return std::find(punctuation_ids.begin(), punctuation_ids.end(), id) !=
           punctuation_ids.end();
  }

  /// Number of drawable sentence tokens (content plus punctuation).
  size_t NumContent() const { return size - first_content_id; }
};

/// Removes every blank token; the left inverse of the denoising perturbation.
inline TokenSeq StripBlanks(const TokenSeq &x, size_t blank_id) {
  TokenSeq out;
  out.reserve(x.size());
  for (size_t tok : x)
    if (tok != blank_id) out.push_back(tok);
  return out;
}

}  // namespace mspst

#endif  // MSPST_VOCAB_HPP_

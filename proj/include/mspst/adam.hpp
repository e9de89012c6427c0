// mspst/adam.hpp

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

#ifndef MSPST_ADAM_HPP_
#define MSPST_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mspst/common.hpp"
#include "mspst/tensor.hpp"

namespace mspst {

/// Per-parameter Adam moment buffers.  `step` counts updates applied to this
/// parameter and strictly increases by one per update.
struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  uint64_t step = 0;
};

/// Optimizer hyperparameters.  beta1/beta2 defaults follow the training
/// setup this repository reproduces; epsilon is our fixed choice (recorded
/// in the config schema) since the source setup leaves it unstated.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

/// One bias-corrected Adam update, in place.  Rejects non-finite gradients
/// (NaN/inf) before touching parameters, moments, or the step counter, so a
/// failed batch can be skipped without corrupting optimizer state.
inline void AdamStep(std::vector<double> &param, const std::vector<double> &grad,
                     AdamState &state, const AdamConfig &cfg) {
  Require(cfg.lr > 0.0, "AdamStep: lr must be positive");
  Require(param.size() == grad.size(), "AdamStep: param/grad size mismatch");
  for (size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw std::runtime_error("AdamStep: non-finite gradient at index " + std::to_string(i));
  if (state.m.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  Require(state.m.size() == param.size() && state.v.size() == param.size(),
          "AdamStep: state size mismatch");
  state.step += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < param.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

/// Convenience overload driving a leaf Tensor from its accumulated gradient.
inline void AdamStep(Tensor &param, AdamState &state, const AdamConfig &cfg) {
  AdamStep(param.Data(), param.Grad(), state, cfg);
}

}  // namespace mspst

#endif  // MSPST_ADAM_HPP_

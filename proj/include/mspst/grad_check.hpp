// mspst/grad_check.hpp

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

#ifndef MSPST_GRAD_CHECK_HPP_
#define MSPST_GRAD_CHECK_HPP_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mspst/common.hpp"
#include "mspst/tensor.hpp"

namespace mspst {

/// Finite-difference gradient verification.
///
/// `f` must be a deterministic scalar-valued function that rebuilds its graph
/// from the *current* contents of `params` on every call (the usual pattern:
/// a lambda closing over the parameter tensors).  For each parameter entry,
/// the analytic gradient from one backward pass is compared against the
/// central difference (f(x+eps) - f(x-eps)) / (2 eps); the return value is
///
///   max over entries of |analytic - central| / max(1, |central|).
///
/// A non-finite f() during probing raises std::runtime_error naming the
/// offending parameter and entry index.
inline double GradCheck(const std::function<Tensor()> &f, std::vector<Tensor> params,
                        double eps = 1e-5) {
  Require(eps > 0.0 && eps <= 1e-2, "GradCheck: eps must lie in (0, 1e-2]");
  for (Tensor &p : params) {
    Require(p.RequiresGrad(), "GradCheck: all params must require gradients");
    p.ZeroGrad();
  }

  Tensor root = f();
  Require(root.IsScalar(), "GradCheck: f must return a scalar");
  if (!std::isfinite(root.Item()))
    throw std::runtime_error("GradCheck: f() is non-finite at the base point");
  Backward(root);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor &p : params) analytic.push_back(p.Grad());

  double max_rel_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    std::vector<double> &data = params[pi].Data();
    for (size_t i = 0; i < data.size(); ++i) {
      double saved = data[i];
      data[i] = saved + eps;
      double f_plus = f().Item();
      data[i] = saved - eps;
      double f_minus = f().Item();
      data[i] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
        throw std::runtime_error("GradCheck: non-finite f while probing param " +
                                 std::to_string(pi) + " entry " + std::to_string(i));
      double central = (f_plus - f_minus) / (2.0 * eps);
      double err = std::abs(analytic[pi][i] - central) / std::max(1.0, std::abs(central));
      if (err > max_rel_err) max_rel_err = err;
    }
  }
  return max_rel_err;
}

}  // namespace mspst

#endif  // MSPST_GRAD_CHECK_HPP_

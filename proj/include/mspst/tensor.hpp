// mspst/tensor.hpp

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

#ifndef MSPST_TENSOR_HPP_
#define MSPST_TENSOR_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mspst/common.hpp"

namespace mspst {

// Minimal dense-tensor core with reverse-mode automatic differentiation.
//
// Design notes, in rough order of importance:
//  * 64-bit floats throughout: at desk scale, precision (oracle matching,
//    finite-difference agreement) matters more than speed.
//  * The tape is dynamic: every op appends a node holding its parents and a
//    backward closure, so control flow (per-phase freezing, per-sample graph
//    shapes) costs nothing special.
//  * Determinism: nodes carry a monotonically increasing creation id, and the
//    backward pass visits reachable nodes in descending id order.  Creation
//    order is a valid topological order of the tape, so this is correct, and
//    unlike pointer-keyed iteration it does not depend on where the allocator
//    placed the nodes — reruns traverse (and therefore round) identically.
//  * Gradient buffers on leaves accumulate additively across backward calls
//    until explicitly zeroed, so composite objectives can be driven term by
//    term.  Interior nodes are transient: their buffers are reset at first
//    touch of each backward invocation (tracked by an epoch stamp), which
//    makes repeated backward calls safe without a tape rebuild.

class TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

namespace internal {
inline std::atomic<uint64_t> g_next_node_id{1};
inline uint64_t g_backward_epoch = 0;
inline thread_local int g_no_grad_depth = 0;
}  // namespace internal

/// True unless a NoGradGuard is active on this thread.
inline bool GradEnabled() { return internal::g_no_grad_depth == 0; }

/// RAII switch that disables tape recording on the current thread.  Used for
/// frozen-teacher forwards (the text encoder during ASR) and all evaluation.
class NoGradGuard {
 public:
  NoGradGuard() { ++internal::g_no_grad_depth; }
  ~NoGradGuard() { --internal::g_no_grad_depth; }
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;
};

/// One vertex of the computation graph: a value buffer, an optional gradient
/// buffer, and (for recorded ops) the parents plus a backward closure.
class TensorNode {
 public:
  uint64_t id;
  std::vector<size_t> dims;
  std::vector<double> value;
  std::vector<double> grad;     // same length as value once touched
  uint64_t grad_epoch = 0;      // last backward invocation that touched grad
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  // Reads this->grad, accumulates into parents' grads via AccumulateInto().
  std::function<void(TensorNode &)> backward_fn;

  TensorNode(std::vector<size_t> d, std::vector<double> v)
      : id(internal::g_next_node_id.fetch_add(1, std::memory_order_relaxed)),
        dims(std::move(d)),
        value(std::move(v)) {}

  size_t NumElements() const { return value.size(); }
  bool IsLeaf() const { return parents.empty(); }

  /// Returns the gradient buffer, zero-initializing it when first touched in
  /// the current backward epoch.  Leaves keep accumulating across epochs.
  std::vector<double> &GradBuffer() {
    if (grad.size() != value.size()) {
      grad.assign(value.size(), 0.0);
    } else if (!IsLeaf() && grad_epoch != internal::g_backward_epoch) {
      std::fill(grad.begin(), grad.end(), 0.0);
    }
    grad_epoch = internal::g_backward_epoch;
    return grad;
  }
};

/// Value-semantics handle to a graph node.  Copying a Tensor aliases the
/// underlying storage (exactly what parameter sharing / weight tying needs).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  /// Leaf filled with zeros.
  static Tensor Zeros(std::vector<size_t> dims, bool requires_grad = false) {
    size_t n = 1;
    for (size_t d : dims) n *= d;
    return WithData(std::move(dims), std::vector<double>(n, 0.0), requires_grad);
  }

  /// Leaf with explicit contents; data length must match the shape.
  static Tensor WithData(std::vector<size_t> dims, std::vector<double> data,
                         bool requires_grad = false) {
    size_t n = 1;
    for (size_t d : dims) n *= d;
    Require(n == data.size(), "Tensor: shape does not match data length");
    auto node = std::make_shared<TensorNode>(std::move(dims), std::move(data));
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  /// Rank-1 scalar constant.
  static Tensor Scalar(double v) { return WithData({1}, {v}); }

  bool Defined() const { return node_ != nullptr; }
  const std::vector<size_t> &Dims() const { return node_->dims; }
  size_t Rank() const { return node_->dims.size(); }
  size_t NumElements() const { return node_->value.size(); }
  size_t Rows() const {
    Require(Rank() == 2, "Tensor::Rows: rank-2 tensor required");
    return node_->dims[0];
  }
  size_t Cols() const {
    Require(Rank() == 2, "Tensor::Cols: rank-2 tensor required");
    return node_->dims[1];
  }
  bool IsScalar() const { return NumElements() == 1; }

  std::vector<double> &Data() { return node_->value; }
  const std::vector<double> &Data() const { return node_->value; }
  double operator()(size_t i) const { return node_->value[i]; }
  double operator()(size_t r, size_t c) const { return node_->value[r * node_->dims[1] + c]; }

  /// Scalar extraction; rejects non-scalars.
  double Item() const {
    Require(IsScalar(), "Tensor::Item: tensor is not a scalar");
    return node_->value[0];
  }

  bool RequiresGrad() const { return node_->requires_grad; }

  /// The accumulated gradient of a leaf (zeros if never touched).
  const std::vector<double> &Grad() const {
    if (node_->grad.size() != node_->value.size())
      node_->grad.assign(node_->value.size(), 0.0);
    return node_->grad;
  }

  void ZeroGrad() { node_->grad.assign(node_->value.size(), 0.0); }

  NodePtr Node() const { return node_; }
  TensorNode &NodeRef() const { return *node_; }

 private:
  NodePtr node_;
};

namespace internal {

/// Accumulates `g` (same length as parent's value) into the parent gradient,
/// respecting the epoch-reset rule.  No-op for parents outside the grad set.
inline void AccumulateInto(TensorNode &parent, const std::vector<double> &g) {
  if (!parent.requires_grad) return;
  std::vector<double> &buf = parent.GradBuffer();
  for (size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

/// Builds a recorded op node.  When gradients are globally disabled, or no
/// parent participates in differentiation, the result is a plain constant
/// leaf — the parents and closure are dropped so no-grad forwards (frozen
/// teachers, evaluation) never grow the tape.
inline Tensor MakeOp(std::vector<size_t> dims, std::vector<double> value,
                     std::vector<Tensor> parents,
                     std::function<void(TensorNode &)> backward_fn) {
  bool rg = false;
  if (GradEnabled())
    for (const Tensor &p : parents) rg = rg || p.RequiresGrad();
  auto node = std::make_shared<TensorNode>(std::move(dims), std::move(value));
  if (rg) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (Tensor &p : parents) node->parents.push_back(p.Node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

}  // namespace internal

/// Reverse-mode sweep from a scalar root.  Gradients of every reachable
/// requires_grad leaf are accumulated additively; repeated calls without
/// zeroing keep accumulating (the contract composite losses rely on).
inline void Backward(const Tensor &root) {
  Require(root.IsScalar(), "Backward: root must be a scalar");
  if (!root.RequiresGrad()) return;  // constant function: all gradients zero

  ++internal::g_backward_epoch;

  // Collect the reachable subgraph.  The visited set is pointer-keyed but is
  // only ever tested for membership; ordering comes from the id sort below.
  std::vector<TensorNode *> order;
  {
    std::unordered_set<const TensorNode *> seen;
    std::vector<TensorNode *> stack{root.Node().get()};
    seen.insert(root.Node().get());
    while (!stack.empty()) {
      TensorNode *n = stack.back();
      stack.pop_back();
      order.push_back(n);
      for (const NodePtr &p : n->parents) {
        if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
      }
    }
  }
  // Descending creation id == children before parents (ids are assigned in
  // construction order, and an op's parents always predate it).
  std::sort(order.begin(), order.end(),
            [](const TensorNode *a, const TensorNode *b) { return a->id > b->id; });

  root.NodeRef().GradBuffer()[0] += 1.0;
  for (TensorNode *n : order) {
    if (!n->backward_fn) continue;                              // leaf
    if (n->grad_epoch != internal::g_backward_epoch) continue;  // no gradient flowed here
    n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// Elementwise and broadcast arithmetic
// ---------------------------------------------------------------------------

inline Tensor Add(const Tensor &a, const Tensor &b) {
  Require(a.Dims() == b.Dims(), "Add: shape mismatch");
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a(i) + b(i);
  return internal::MakeOp(a.Dims(), std::move(v), {a, b}, [](TensorNode &self) {
    internal::AccumulateInto(*self.parents[0], self.grad);
    internal::AccumulateInto(*self.parents[1], self.grad);
  });
}

inline Tensor Sub(const Tensor &a, const Tensor &b) {
  Require(a.Dims() == b.Dims(), "Sub: shape mismatch");
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a(i) - b(i);
  return internal::MakeOp(a.Dims(), std::move(v), {a, b}, [](TensorNode &self) {
    internal::AccumulateInto(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      std::vector<double> g(self.grad.size());
      for (size_t i = 0; i < g.size(); ++i) g[i] = -self.grad[i];
      internal::AccumulateInto(*self.parents[1], g);
    }
  });
}

inline Tensor Mul(const Tensor &a, const Tensor &b) {
  Require(a.Dims() == b.Dims(), "Mul: shape mismatch");
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a(i) * b(i);
  return internal::MakeOp(a.Dims(), std::move(v), {a, b}, [](TensorNode &self) {
    const std::vector<double> &av = self.parents[0]->value;
    const std::vector<double> &bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      std::vector<double> g(self.grad.size());
      for (size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * bv[i];
      internal::AccumulateInto(*self.parents[0], g);
    }
    if (self.parents[1]->requires_grad) {
      std::vector<double> g(self.grad.size());
      for (size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * av[i];
      internal::AccumulateInto(*self.parents[1], g);
    }
  });
}

inline Tensor Scale(const Tensor &a, double c) {
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a(i) * c;
  return internal::MakeOp(a.Dims(), std::move(v), {a}, [c](TensorNode &self) {
    std::vector<double> g(self.grad.size());
    for (size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * c;
    internal::AccumulateInto(*self.parents[0], g);
  });
}

inline Tensor Neg(const Tensor &a) { return Scale(a, -1.0); }

inline Tensor AddScalar(const Tensor &a, double c) {
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a(i) + c;
  return internal::MakeOp(a.Dims(), std::move(v), {a}, [](TensorNode &self) {
    internal::AccumulateInto(*self.parents[0], self.grad);
  });
}

/// [N x D] + [D], the bias-add broadcast.
inline Tensor AddRowVector(const Tensor &a, const Tensor &b) {
  Require(a.Rank() == 2 && b.Rank() == 1 && a.Cols() == b.NumElements(),
          "AddRowVector: need [N x D] and [D]");
  size_t n = a.Rows(), d = a.Cols();
  std::vector<double> v(n * d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) v[i * d + j] = a(i, j) + b(j);
  return internal::MakeOp(a.Dims(), std::move(v), {a, b}, [n, d](TensorNode &self) {
    internal::AccumulateInto(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      std::vector<double> g(d, 0.0);
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) g[j] += self.grad[i * d + j];
      internal::AccumulateInto(*self.parents[1], g);
    }
  });
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

/// [N x K] · [K x M] -> [N x M].
inline Tensor MatMul(const Tensor &a, const Tensor &b) {
  Require(a.Rank() == 2 && b.Rank() == 2 && a.Cols() == b.Rows(), "MatMul: shape mismatch");
  size_t n = a.Rows(), k = a.Cols(), m = b.Cols();
  std::vector<double> v(n * m, 0.0);
  {
    const std::vector<double> &av = a.Data();
    const std::vector<double> &bv = b.Data();
    for (size_t i = 0; i < n; ++i)
      for (size_t p = 0; p < k; ++p) {
        double x = av[i * k + p];
        if (x == 0.0) continue;
        const double *brow = &bv[p * m];
        double *vrow = &v[i * m];
        for (size_t j = 0; j < m; ++j) vrow[j] += x * brow[j];
      }
  }
  return internal::MakeOp({n, m}, std::move(v), {a, b}, [n, k, m](TensorNode &self) {
    const std::vector<double> &av = self.parents[0]->value;
    const std::vector<double> &bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      // dA = dC · B^T : dA[i,p] = sum_j dC[i,j] B[p,j]
      std::vector<double> g(n * k, 0.0);
      for (size_t i = 0; i < n; ++i)
        for (size_t p = 0; p < k; ++p) {
          const double *grow = &self.grad[i * m];
          const double *brow = &bv[p * m];
          double acc = 0.0;
          for (size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          g[i * k + p] = acc;
        }
      internal::AccumulateInto(*self.parents[0], g);
    }
    if (self.parents[1]->requires_grad) {
      // dB = A^T · dC : dB[p,j] = sum_i A[i,p] dC[i,j]
      std::vector<double> g(k * m, 0.0);
      for (size_t i = 0; i < n; ++i)
        for (size_t p = 0; p < k; ++p) {
          double x = av[i * k + p];
          if (x == 0.0) continue;
          const double *grow = &self.grad[i * m];
          double *out = &g[p * m];
          for (size_t j = 0; j < m; ++j) out[j] += x * grow[j];
        }
      internal::AccumulateInto(*self.parents[1], g);
    }
  });
}

/// [N x K] · [M x K]^T -> [N x M].  The projection shape H · E^T used by
/// every vocabulary logit (CTC head and decoder head share this path).
inline Tensor MatMulNT(const Tensor &a, const Tensor &b) {
  Require(a.Rank() == 2 && b.Rank() == 2 && a.Cols() == b.Cols(), "MatMulNT: shape mismatch");
  size_t n = a.Rows(), k = a.Cols(), m = b.Rows();
  std::vector<double> v(n * m);
  {
    const std::vector<double> &av = a.Data();
    const std::vector<double> &bv = b.Data();
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < m; ++j) {
        const double *arow = &av[i * k];
        const double *brow = &bv[j * k];
        double acc = 0.0;
        for (size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        v[i * m + j] = acc;
      }
  }
  return internal::MakeOp({n, m}, std::move(v), {a, b}, [n, k, m](TensorNode &self) {
    const std::vector<double> &av = self.parents[0]->value;
    const std::vector<double> &bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      // dA = dC · B : dA[i,p] = sum_j dC[i,j] B[j,p]
      std::vector<double> g(n * k, 0.0);
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
          double x = self.grad[i * m + j];
          if (x == 0.0) continue;
          const double *brow = &bv[j * k];
          double *out = &g[i * k];
          for (size_t p = 0; p < k; ++p) out[p] += x * brow[p];
        }
      internal::AccumulateInto(*self.parents[0], g);
    }
    if (self.parents[1]->requires_grad) {
      // dB = dC^T · A : dB[j,p] = sum_i dC[i,j] A[i,p]
      std::vector<double> g(m * k, 0.0);
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
          double x = self.grad[i * m + j];
          if (x == 0.0) continue;
          const double *arow = &av[i * k];
          double *out = &g[j * k];
          for (size_t p = 0; p < k; ++p) out[p] += x * arow[p];
        }
      internal::AccumulateInto(*self.parents[1], g);
    }
  });
}

// ---------------------------------------------------------------------------
// Shape surgery
// ---------------------------------------------------------------------------

inline Tensor Reshape(const Tensor &a, std::vector<size_t> dims) {
  size_t n = 1;
  for (size_t d : dims) n *= d;
  Require(n == a.NumElements(), "Reshape: element count mismatch");
  std::vector<double> v = a.Data();
  return internal::MakeOp(std::move(dims), std::move(v), {a}, [](TensorNode &self) {
    internal::AccumulateInto(*self.parents[0], self.grad);
  });
}

/// Columns [c0, c1) of a rank-2 tensor.
inline Tensor SliceCols(const Tensor &a, size_t c0, size_t c1) {
  Require(a.Rank() == 2 && c0 < c1 && c1 <= a.Cols(), "SliceCols: bad range");
  size_t n = a.Rows(), d = a.Cols(), w = c1 - c0;
  std::vector<double> v(n * w);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < w; ++j) v[i * w + j] = a(i, c0 + j);
  return internal::MakeOp({n, w}, std::move(v), {a}, [n, d, w, c0](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    std::vector<double> g(n * d, 0.0);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < w; ++j) g[i * d + c0 + j] = self.grad[i * w + j];
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Horizontal concatenation of rank-2 tensors with equal row counts.
inline Tensor ConcatCols(const std::vector<Tensor> &parts) {
  Require(!parts.empty(), "ConcatCols: empty input");
  size_t n = parts[0].Rows(), d = 0;
  std::vector<size_t> widths;
  for (const Tensor &p : parts) {
    Require(p.Rank() == 2 && p.Rows() == n, "ConcatCols: row count mismatch");
    widths.push_back(p.Cols());
    d += p.Cols();
  }
  std::vector<double> v(n * d);
  size_t off = 0;
  for (const Tensor &p : parts) {
    size_t w = p.Cols();
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < w; ++j) v[i * d + off + j] = p(i, j);
    off += w;
  }
  return internal::MakeOp({n, d}, std::move(v), parts, [n, d, widths](TensorNode &self) {
    size_t off = 0;
    for (size_t k = 0; k < widths.size(); ++k) {
      size_t w = widths[k];
      if (self.parents[k]->requires_grad) {
        std::vector<double> g(n * w);
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < w; ++j) g[i * w + j] = self.grad[i * d + off + j];
        internal::AccumulateInto(*self.parents[k], g);
      }
      off += w;
    }
  });
}

/// Concatenation of rank-1 tensors into one vector (used to assemble the
/// per-anchor similarity rows of the contrastive loss).
inline Tensor ConcatVec(const std::vector<Tensor> &parts) {
  Require(!parts.empty(), "ConcatVec: empty input");
  std::vector<size_t> lens;
  size_t total = 0;
  for (const Tensor &p : parts) {
    Require(p.Rank() == 1, "ConcatVec: rank-1 tensors required");
    lens.push_back(p.NumElements());
    total += p.NumElements();
  }
  std::vector<double> v;
  v.reserve(total);
  for (const Tensor &p : parts) v.insert(v.end(), p.Data().begin(), p.Data().end());
  return internal::MakeOp({total}, std::move(v), parts, [lens](TensorNode &self) {
    size_t off = 0;
    for (size_t k = 0; k < lens.size(); ++k) {
      if (self.parents[k]->requires_grad) {
        std::vector<double> g(self.grad.begin() + off, self.grad.begin() + off + lens[k]);
        internal::AccumulateInto(*self.parents[k], g);
      }
      off += lens[k];
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions and lookups
// ---------------------------------------------------------------------------

/// Sum of all elements -> scalar.
inline Tensor Sum(const Tensor &a) {
  double acc = 0.0;
  for (size_t i = 0; i < a.NumElements(); ++i) acc += a(i);
  return internal::MakeOp({1}, {acc}, {a}, [](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    std::vector<double> g(self.parents[0]->value.size(), self.grad[0]);
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Sums the rows of [N x D] together -> [D] (time pooling).
inline Tensor SumRows(const Tensor &a) {
  Require(a.Rank() == 2, "SumRows: rank-2 tensor required");
  size_t n = a.Rows(), d = a.Cols();
  std::vector<double> v(d, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) v[j] += a(i, j);
  return internal::MakeOp({d}, std::move(v), {a}, [n, d](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    std::vector<double> g(n * d);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < d; ++j) g[i * d + j] = self.grad[j];
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Row lookup: out[l, :] = table[ids[l], :].  Token embedding; the backward
/// pass scatter-adds, so repeated ids accumulate correctly.
inline Tensor GatherRows(const Tensor &table, const std::vector<size_t> &ids) {
  Require(table.Rank() == 2, "GatherRows: rank-2 table required");
  size_t v_size = table.Rows(), d = table.Cols(), l = ids.size();
  Require(l > 0, "GatherRows: empty id list");
  for (size_t id : ids) Require(id < v_size, "GatherRows: id out of range");
  std::vector<double> v(l * d);
  for (size_t i = 0; i < l; ++i)
    for (size_t j = 0; j < d; ++j) v[i * d + j] = table(ids[i], j);
  return internal::MakeOp({l, d}, std::move(v), {table}, [ids, v_size, d, l](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    std::vector<double> g(v_size * d, 0.0);
    for (size_t i = 0; i < l; ++i)
      for (size_t j = 0; j < d; ++j) g[ids[i] * d + j] += self.grad[i * d + j];
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Per-row column pick: out[i] = a[i, ids[i]] (the gold-label log-prob pick
/// of cross-entropy).
inline Tensor GatherCols(const Tensor &a, const std::vector<size_t> &ids) {
  Require(a.Rank() == 2 && ids.size() == a.Rows(), "GatherCols: one id per row required");
  size_t n = a.Rows(), m = a.Cols();
  for (size_t id : ids) Require(id < m, "GatherCols: id out of range");
  std::vector<double> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = a(i, ids[i]);
  return internal::MakeOp({n}, std::move(v), {a}, [ids, n, m](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    std::vector<double> g(n * m, 0.0);
    for (size_t i = 0; i < n; ++i) g[i * m + ids[i]] = self.grad[i];
    internal::AccumulateInto(*self.parents[0], g);
  });
}

// ---------------------------------------------------------------------------
// Nonlinearities and normalizations
// ---------------------------------------------------------------------------

inline Tensor Relu(const Tensor &a) {
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a(i) > 0.0 ? a(i) : 0.0;
  return internal::MakeOp(a.Dims(), std::move(v), {a}, [](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    const std::vector<double> &x = self.parents[0]->value;
    std::vector<double> g(self.grad.size());
    for (size_t i = 0; i < g.size(); ++i) g[i] = x[i] > 0.0 ? self.grad[i] : 0.0;
    internal::AccumulateInto(*self.parents[0], g);
  });
}

inline Tensor Sigmoid(const Tensor &a) {
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-a(i)));
  return internal::MakeOp(a.Dims(), std::move(v), {a}, [](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    std::vector<double> g(self.grad.size());
    for (size_t i = 0; i < g.size(); ++i) {
      double y = self.value[i];
      g[i] = self.grad[i] * y * (1.0 - y);
    }
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// x * sigmoid(x) (the swish activation of the convolution sub-block).
inline Tensor Silu(const Tensor &a) {
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) {
    double s = 1.0 / (1.0 + std::exp(-a(i)));
    v[i] = a(i) * s;
  }
  return internal::MakeOp(a.Dims(), std::move(v), {a}, [](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    const std::vector<double> &x = self.parents[0]->value;
    std::vector<double> g(self.grad.size());
    for (size_t i = 0; i < g.size(); ++i) {
      double s = 1.0 / (1.0 + std::exp(-x[i]));
      g[i] = self.grad[i] * s * (1.0 + x[i] * (1.0 - s));
    }
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Elementwise x^p.  Callers use it with positive inputs (norms); p < 1 at
/// x = 0 would produce an infinite derivative, which is the caller's bug.
inline Tensor PowScalar(const Tensor &a, double p) {
  std::vector<double> v(a.NumElements());
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::pow(a(i), p);
  return internal::MakeOp(a.Dims(), std::move(v), {a}, [p](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    const std::vector<double> &x = self.parents[0]->value;
    std::vector<double> g(self.grad.size());
    for (size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * p * std::pow(x[i], p - 1.0);
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Row-wise softmax of a rank-2 tensor, max-shifted.  -inf scores (masked
/// keys) come out as exactly 0 weight, which keeps causal masking bitwise.
inline Tensor SoftmaxRows(const Tensor &a) {
  Require(a.Rank() == 2, "SoftmaxRows: rank-2 tensor required");
  size_t n = a.Rows(), m = a.Cols();
  std::vector<double> v(n * m);
  for (size_t i = 0; i < n; ++i) {
    double mx = kNegInf;
    for (size_t j = 0; j < m; ++j) mx = std::max(mx, a(i, j));
    Check(mx != kNegInf, "SoftmaxRows: fully masked row");
    double z = 0.0;
    for (size_t j = 0; j < m; ++j) {
      v[i * m + j] = std::exp(a(i, j) - mx);
      z += v[i * m + j];
    }
    for (size_t j = 0; j < m; ++j) v[i * m + j] /= z;
  }
  return internal::MakeOp({n, m}, std::move(v), {a}, [n, m](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    // ds_j = y_j (g_j - sum_k y_k g_k), row by row.
    std::vector<double> g(n * m);
    for (size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (size_t j = 0; j < m; ++j) dot += self.value[i * m + j] * self.grad[i * m + j];
      for (size_t j = 0; j < m; ++j)
        g[i * m + j] = self.value[i * m + j] * (self.grad[i * m + j] - dot);
    }
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Row-wise log-softmax (the numerically safe input to NLL and CTC).
inline Tensor LogSoftmaxRows(const Tensor &a) {
  Require(a.Rank() == 2, "LogSoftmaxRows: rank-2 tensor required");
  size_t n = a.Rows(), m = a.Cols();
  std::vector<double> v(n * m);
  for (size_t i = 0; i < n; ++i) {
    double mx = kNegInf;
    for (size_t j = 0; j < m; ++j) mx = std::max(mx, a(i, j));
    Check(mx != kNegInf, "LogSoftmaxRows: fully masked row");
    double z = 0.0;
    for (size_t j = 0; j < m; ++j) z += std::exp(a(i, j) - mx);
    double lz = mx + std::log(z);
    for (size_t j = 0; j < m; ++j) v[i * m + j] = a(i, j) - lz;
  }
  return internal::MakeOp({n, m}, std::move(v), {a}, [n, m](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    // ds_j = g_j - exp(y_j) * sum_k g_k, row by row.
    std::vector<double> g(n * m);
    for (size_t i = 0; i < n; ++i) {
      double gs = 0.0;
      for (size_t j = 0; j < m; ++j) gs += self.grad[i * m + j];
      for (size_t j = 0; j < m; ++j)
        g[i * m + j] = self.grad[i * m + j] - std::exp(self.value[i * m + j]) * gs;
    }
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Differentiable log sum_i exp(x_i) of a rank-1 tensor -> scalar.
inline Tensor LogSumExpVec(const Tensor &a) {
  Require(a.Rank() == 1 && a.NumElements() > 0, "LogSumExpVec: non-empty rank-1 required");
  double lse = LogSumExp(std::span<const double>(a.Data()));
  Check(lse != kNegInf, "LogSumExpVec: all inputs are -inf");
  return internal::MakeOp({1}, {lse}, {a}, [lse](TensorNode &self) {
    if (!self.parents[0]->requires_grad) return;
    const std::vector<double> &x = self.parents[0]->value;
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) g[i] = self.grad[0] * std::exp(x[i] - lse);
    internal::AccumulateInto(*self.parents[0], g);
  });
}

/// Fused layer normalization over the last dimension of [N x D] with learned
/// gain/bias.  Population variance (divide by D), epsilon inside the root.
inline Tensor LayerNormOp(const Tensor &x, const Tensor &gamma, const Tensor &beta,
                          double eps = 1e-5) {
  Require(x.Rank() == 2, "LayerNormOp: rank-2 input required");
  size_t n = x.Rows(), d = x.Cols();
  Require(gamma.Rank() == 1 && gamma.NumElements() == d, "LayerNormOp: gamma shape");
  Require(beta.Rank() == 1 && beta.NumElements() == d, "LayerNormOp: beta shape");
  std::vector<double> v(n * d);
  std::vector<double> xhat(n * d);
  std::vector<double> inv_std(n);
  for (size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (size_t j = 0; j < d; ++j) mean += x(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (size_t j = 0; j < d; ++j) {
      double c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (x(i, j) - mean) * inv_std[i];
      v[i * d + j] = gamma(j) * xhat[i * d + j] + beta(j);
    }
  }
  return internal::MakeOp(
      {n, d}, std::move(v), {x, gamma, beta},
      [n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode &self) {
        const std::vector<double> &gm = self.parents[1]->value;
        if (self.parents[0]->requires_grad) {
          // dx = inv_std * (dxh - mean(dxh) - xhat * mean(dxh ∘ xhat))
          // with dxh = g ∘ gamma, means taken over the row.
          std::vector<double> g(n * d);
          for (size_t i = 0; i < n; ++i) {
            double m1 = 0.0, m2 = 0.0;
            for (size_t j = 0; j < d; ++j) {
              double dxh = self.grad[i * d + j] * gm[j];
              m1 += dxh;
              m2 += dxh * xhat[i * d + j];
            }
            m1 /= static_cast<double>(d);
            m2 /= static_cast<double>(d);
            for (size_t j = 0; j < d; ++j) {
              double dxh = self.grad[i * d + j] * gm[j];
              g[i * d + j] = inv_std[i] * (dxh - m1 - xhat[i * d + j] * m2);
            }
          }
          internal::AccumulateInto(*self.parents[0], g);
        }
        if (self.parents[1]->requires_grad) {
          std::vector<double> g(d, 0.0);
          for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < d; ++j) g[j] += self.grad[i * d + j] * xhat[i * d + j];
          internal::AccumulateInto(*self.parents[1], g);
        }
        if (self.parents[2]->requires_grad) {
          std::vector<double> g(d, 0.0);
          for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < d; ++j) g[j] += self.grad[i * d + j];
          internal::AccumulateInto(*self.parents[2], g);
        }
      });
}

// ---------------------------------------------------------------------------
// Convolution support
// ---------------------------------------------------------------------------

/// im2col for 1-D sequences: [T x C] -> [T_out x (k*C)] where output row t
/// holds the zero-padded window x[t*stride - pad + j][c], flattened j-major.
/// T_out = floor((T + 2*pad - k) / stride) + 1.
inline Tensor Unfold1d(const Tensor &x, size_t kernel, size_t stride, size_t pad) {
  Require(x.Rank() == 2, "Unfold1d: rank-2 input required");
  Require(kernel >= 1 && stride >= 1, "Unfold1d: kernel and stride must be positive");
  size_t t = x.Rows(), c = x.Cols();
  Require(t + 2 * pad >= kernel, "Unfold1d: input shorter than kernel");
  size_t t_out = (t + 2 * pad - kernel) / stride + 1;
  std::vector<double> v(t_out * kernel * c, 0.0);
  for (size_t o = 0; o < t_out; ++o)
    for (size_t j = 0; j < kernel; ++j) {
      long src = static_cast<long>(o * stride + j) - static_cast<long>(pad);
      if (src < 0 || src >= static_cast<long>(t)) continue;
      for (size_t ch = 0; ch < c; ++ch)
        v[(o * kernel + j) * c + ch] = x(static_cast<size_t>(src), ch);
    }
  return internal::MakeOp({t_out, kernel * c}, std::move(v), {x},
                          [t, c, kernel, stride, pad, t_out](TensorNode &self) {
                            if (!self.parents[0]->requires_grad) return;
                            std::vector<double> g(t * c, 0.0);
                            for (size_t o = 0; o < t_out; ++o)
                              for (size_t j = 0; j < kernel; ++j) {
                                long src = static_cast<long>(o * stride + j) -
                                           static_cast<long>(pad);
                                if (src < 0 || src >= static_cast<long>(t)) continue;
                                for (size_t ch = 0; ch < c; ++ch)
                                  g[static_cast<size_t>(src) * c + ch] +=
                                      self.grad[(o * kernel + j) * c + ch];
                              }
                            internal::AccumulateInto(*self.parents[0], g);
                          });
}

/// Depthwise 1-D convolution, stride 1, "same" zero padding (odd kernel):
/// out[t, c] = sum_j w[j, c] * x[t + j - (k-1)/2, c].
inline Tensor DepthwiseConv1d(const Tensor &x, const Tensor &w) {
  Require(x.Rank() == 2 && w.Rank() == 2, "DepthwiseConv1d: rank-2 tensors required");
  size_t t = x.Rows(), c = x.Cols(), k = w.Rows();
  Require(w.Cols() == c, "DepthwiseConv1d: channel mismatch");
  Require(k % 2 == 1, "DepthwiseConv1d: odd kernel required for same padding");
  size_t pad = (k - 1) / 2;
  std::vector<double> v(t * c, 0.0);
  for (size_t o = 0; o < t; ++o)
    for (size_t j = 0; j < k; ++j) {
      long src = static_cast<long>(o + j) - static_cast<long>(pad);
      if (src < 0 || src >= static_cast<long>(t)) continue;
      for (size_t ch = 0; ch < c; ++ch)
        v[o * c + ch] += w(j, ch) * x(static_cast<size_t>(src), ch);
    }
  return internal::MakeOp({t, c}, std::move(v), {x, w}, [t, c, k, pad](TensorNode &self) {
    const std::vector<double> &xv = self.parents[0]->value;
    const std::vector<double> &wv = self.parents[1]->value;
    std::vector<double> gx(self.parents[0]->requires_grad ? t * c : 0, 0.0);
    std::vector<double> gw(self.parents[1]->requires_grad ? k * c : 0, 0.0);
    for (size_t o = 0; o < t; ++o)
      for (size_t j = 0; j < k; ++j) {
        long src = static_cast<long>(o + j) - static_cast<long>(pad);
        if (src < 0 || src >= static_cast<long>(t)) continue;
        size_t s = static_cast<size_t>(src);
        for (size_t ch = 0; ch < c; ++ch) {
          double go = self.grad[o * c + ch];
          if (!gx.empty()) gx[s * c + ch] += wv[j * c + ch] * go;
          if (!gw.empty()) gw[j * c + ch] += xv[s * c + ch] * go;
        }
      }
    if (!gx.empty()) internal::AccumulateInto(*self.parents[0], gx);
    if (!gw.empty()) internal::AccumulateInto(*self.parents[1], gw);
  });
}

}  // namespace mspst

#endif  // MSPST_TENSOR_HPP_

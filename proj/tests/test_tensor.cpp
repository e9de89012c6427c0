// tests/test_tensor.cpp

// Copyright 2026  The mspst authors

// See ../LICENSE for clarification regarding multiple authors
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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mspst/adam.hpp"
#include "mspst/common.hpp"
#include "mspst/grad_check.hpp"
#include "mspst/rng.hpp"
#include "mspst/tensor.hpp"

namespace mspst {
namespace {

Tensor RandomParam(std::vector<size_t> dims, Rng &rng, double scale = 1.0) {
  size_t n = 1;
  for (size_t d : dims) n *= d;
  std::vector<double> data(n);
  for (double &x : data) x = rng.Uniform(-scale, scale);
  return Tensor::WithData(std::move(dims), std::move(data), /*requires_grad=*/true);
}

// --------------------------- backward basics ------------------------------

TEST(Backward, SquareHasDerivativeTwoX) {
  Tensor w = Tensor::WithData({1}, {3.0}, true);
  Tensor loss = Mul(w, w);
  Backward(loss);
  EXPECT_DOUBLE_EQ(w.Grad()[0], 6.0);
}

TEST(Backward, ConstantFunctionHasZeroGradient) {
  Tensor w = Tensor::WithData({1}, {3.0}, true);
  Tensor c = Tensor::Scalar(7.0);
  // The loss touches w only through a recorded graph that ignores it.
  Tensor loss = Add(Mul(c, Tensor::Scalar(2.0)), Scale(w, 0.0));
  Backward(loss);
  EXPECT_DOUBLE_EQ(w.Grad()[0], 0.0);
}

TEST(Backward, SumOfSoftmaxIsConstantOne) {
  Rng rng(11);
  Tensor w = RandomParam({1, 5}, rng);
  Tensor loss = Sum(SoftmaxRows(w));
  EXPECT_NEAR(loss.Item(), 1.0, 1e-12);
  Backward(loss);
  for (double g : w.Grad()) EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(Backward, NonScalarRootRejected) {
  Tensor w = Tensor::WithData({2}, {1.0, 2.0}, true);
  Tensor y = Scale(w, 2.0);
  EXPECT_THROW(Backward(y), std::invalid_argument);
}

TEST(Backward, RepeatedCallsAccumulateOnLeaves) {
  Tensor w = Tensor::WithData({1}, {3.0}, true);
  Backward(Mul(w, w));
  Backward(Mul(w, w));
  EXPECT_DOUBLE_EQ(w.Grad()[0], 12.0);
  w.ZeroGrad();
  EXPECT_DOUBLE_EQ(w.Grad()[0], 0.0);
}

TEST(Backward, TermByTermCompositeMatchesJointBackward) {
  // Driving a composite objective term by term must equal one joint sweep.
  Rng rng(5);
  Tensor w1 = RandomParam({3, 3}, rng);
  Tensor w2 = RandomParam({3, 3}, rng);
  auto term1 = [&] { return Sum(MatMul(w1, w2)); };
  auto term2 = [&] { return Sum(Mul(w1, w1)); };

  Backward(term1());
  Backward(term2());
  std::vector<double> split_g1 = w1.Grad(), split_g2 = w2.Grad();

  w1.ZeroGrad();
  w2.ZeroGrad();
  Backward(Add(term1(), term2()));
  for (size_t i = 0; i < split_g1.size(); ++i) {
    EXPECT_NEAR(split_g1[i], w1.Grad()[i], 1e-12);
    EXPECT_NEAR(split_g2[i], w2.Grad()[i], 1e-12);
  }
}

TEST(Backward, SharedSubexpressionGradientIsCorrect) {
  // d/dw of (w*w + w*w) with a *shared* node for w*w must be 4w, not 2w.
  Tensor w = Tensor::WithData({1}, {3.0}, true);
  Tensor sq = Mul(w, w);
  Backward(Add(sq, sq));
  EXPECT_DOUBLE_EQ(w.Grad()[0], 12.0);
}

TEST(Backward, DeterministicAcrossRuns) {
  auto run = [] {
    Rng rng(17);
    Tensor a = RandomParam({4, 6}, rng);
    Tensor b = RandomParam({6, 3}, rng);
    Tensor loss = Sum(SoftmaxRows(MatMul(a, b)));
    Backward(loss);
    std::vector<double> out = a.Grad();
    out.insert(out.end(), b.Grad().begin(), b.Grad().end());
    return out;
  };
  std::vector<double> g1 = run(), g2 = run();
  ASSERT_EQ(g1.size(), g2.size());
  for (size_t i = 0; i < g1.size(); ++i) {
    // Bitwise equality: determinism is a hard contract, not a tolerance.
    EXPECT_EQ(g1[i], g2[i]);
  }
}

TEST(NoGradGuard, SuppressesTapeRecording) {
  Tensor w = Tensor::WithData({1}, {2.0}, true);
  NoGradGuard guard;
  Tensor y = Mul(w, w);
  EXPECT_FALSE(y.RequiresGrad());
  EXPECT_TRUE(y.NodeRef().parents.empty());
}

TEST(Graph, ConstantSubgraphsAreNotTracked) {
  Tensor c1 = Tensor::Scalar(1.5);
  Tensor c2 = Tensor::Scalar(2.5);
  Tensor y = Add(c1, c2);
  EXPECT_FALSE(y.RequiresGrad());
  EXPECT_TRUE(y.NodeRef().parents.empty());
}

// ------------------------------ logsumexp ---------------------------------

TEST(LogSumExpNumeric, TwoZerosGiveLnTwo) {
  std::vector<double> v{0.0, 0.0};
  EXPECT_NEAR(LogSumExp(v), std::log(2.0), 1e-15);
}

TEST(LogSumExpNumeric, NegInfIsIdentityElement) {
  std::vector<double> v{kNegInf, 1.25};
  EXPECT_DOUBLE_EQ(LogSumExp(v), 1.25);
  EXPECT_DOUBLE_EQ(LogSumExp2(kNegInf, -3.5), -3.5);
  std::vector<double> allinf{kNegInf, kNegInf};
  EXPECT_EQ(LogSumExp(allinf), kNegInf);
}

TEST(LogSumExpNumeric, LargeInputsDoNotOverflow) {
  std::vector<double> v{1000.0, 1000.0};
  EXPECT_NEAR(LogSumExp(v), 1000.0 + std::log(2.0), 1e-12);
}

TEST(LogSumExpNumeric, ShiftInvariance) {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 1 + rng.UniformInt(8);
    std::vector<double> v(n), shifted(n);
    double c = rng.Uniform(-100.0, 100.0);
    for (size_t i = 0; i < n; ++i) {
      v[i] = rng.Uniform(-10.0, 10.0);
      shifted[i] = v[i] + c;
    }
    EXPECT_NEAR(LogSumExp(shifted), LogSumExp(v) + c, 1e-9);
  }
}

// -------------------------------- Adam ------------------------------------

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  std::vector<double> p{1.0, -2.0, 3.0};
  std::vector<double> g(3, 0.0);
  AdamState st;
  AdamStep(p, g, st, AdamConfig{});
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_DOUBLE_EQ(p[1], -2.0);
  EXPECT_DOUBLE_EQ(p[2], 3.0);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepOnUnitGradientMovesByLearningRate) {
  // With bias correction, m-hat = v-hat = 1 on the first step, so the update
  // is lr / (1 + eps) — i.e. the learning rate up to the epsilon guard.
  std::vector<double> p{1.0};
  std::vector<double> g{1.0};
  AdamState st;
  AdamConfig cfg;
  cfg.lr = 0.1;
  AdamStep(p, g, st, cfg);
  EXPECT_NEAR(p[0], 0.9, 1e-7);
}

TEST(Adam, DeterministicGivenIdenticalInputs) {
  auto run = [] {
    std::vector<double> p{0.5, -1.5};
    AdamState st;
    AdamConfig cfg;
    cfg.lr = 0.01;
    for (int i = 0; i < 10; ++i) {
      std::vector<double> g{0.3 * (i + 1), -0.2};
      AdamStep(p, g, st, cfg);
    }
    return p;
  };
  std::vector<double> a = run(), b = run();
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[1], b[1]);
}

TEST(Adam, NonFiniteGradientRejectedBeforeMutation) {
  std::vector<double> p{1.0};
  AdamState st;
  AdamConfig cfg;
  AdamStep(p, {0.5}, st, cfg);
  std::vector<double> p_before = p;
  AdamState st_before = st;
  std::vector<double> bad{std::nan("")};
  EXPECT_THROW(AdamStep(p, bad, st, cfg), std::runtime_error);
  EXPECT_EQ(p[0], p_before[0]);
  EXPECT_EQ(st.step, st_before.step);
  EXPECT_EQ(st.m[0], st_before.m[0]);
  EXPECT_EQ(st.v[0], st_before.v[0]);
}

TEST(Adam, DefaultBetasMatchTrainingSetup) {
  AdamConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.beta1, 0.9);
  EXPECT_DOUBLE_EQ(cfg.beta2, 0.98);
  EXPECT_DOUBLE_EQ(cfg.eps, 1e-8);
}

// ----------------------------- grad_check ---------------------------------

TEST(GradCheck, QuadraticFormIsExactToRoundoff) {
  Rng rng(31);
  Tensor w = RandomParam({4}, rng);
  Tensor a = RandomParam({4}, rng);
  auto f = [&] { return Sum(Mul(Mul(w, w), a)); };
  EXPECT_LT(GradCheck(f, {w}, 1e-5), 1e-6);
}

TEST(GradCheck, RejectsBadEps) {
  Tensor w = Tensor::WithData({1}, {1.0}, true);
  auto f = [&] { return Mul(w, w); };
  EXPECT_THROW(GradCheck(f, {w}, 0.0), std::invalid_argument);
  EXPECT_THROW(GradCheck(f, {w}, 0.5), std::invalid_argument);
}

// --------------------------- op-by-op gradients ---------------------------

TEST(OpGradients, ElementwiseAndBroadcastOps) {
  Rng rng(41);
  Tensor a = RandomParam({3, 4}, rng);
  Tensor b = RandomParam({3, 4}, rng);
  Tensor bias = RandomParam({4}, rng);
  auto f = [&] {
    Tensor t = Add(Mul(a, b), Sub(a, b));
    t = AddRowVector(Scale(t, 0.7), bias);
    return Sum(AddScalar(Neg(t), 0.3));
  };
  EXPECT_LT(GradCheck(f, {a, b, bias}, 1e-5), 1e-8);
}

TEST(OpGradients, MatrixProducts) {
  Rng rng(43);
  Tensor a = RandomParam({3, 5}, rng);
  Tensor b = RandomParam({5, 4}, rng);
  Tensor c = RandomParam({6, 5}, rng);
  auto f = [&] { return Sum(Mul(MatMul(a, b), MatMul(a, b))); };
  EXPECT_LT(GradCheck(f, {a, b}, 1e-5), 1e-7);
  auto g = [&] { return Sum(Mul(MatMulNT(a, c), MatMulNT(a, c))); };
  EXPECT_LT(GradCheck(g, {a, c}, 1e-5), 1e-7);
}

TEST(OpGradients, ShapeSurgeryOps) {
  Rng rng(47);
  Tensor a = RandomParam({2, 6}, rng);
  Tensor b = RandomParam({2, 3}, rng);
  auto f = [&] {
    Tensor r = Reshape(a, {3, 4});
    Tensor s = SliceCols(a, 1, 4);
    Tensor cat = ConcatCols({s, b});
    return Add(Sum(Mul(r, r)), Sum(Mul(cat, cat)));
  };
  EXPECT_LT(GradCheck(f, {a, b}, 1e-5), 1e-7);
}

TEST(OpGradients, ConcatVecAndLogSumExp) {
  Rng rng(53);
  Tensor a = RandomParam({3}, rng);
  Tensor b = RandomParam({2}, rng);
  auto f = [&] { return LogSumExpVec(ConcatVec({a, b})); };
  EXPECT_LT(GradCheck(f, {a, b}, 1e-5), 1e-8);
}

TEST(OpGradients, ReductionsAndLookups) {
  Rng rng(59);
  Tensor table = RandomParam({5, 3}, rng);
  Tensor m = RandomParam({4, 3}, rng);
  std::vector<size_t> row_ids{0, 2, 2, 4};  // repeated id exercises scatter-add
  std::vector<size_t> col_ids{2, 0, 1, 0};
  auto f = [&] {
    Tensor g = GatherRows(table, row_ids);
    Tensor pooled = SumRows(Mul(g, m));
    return Sum(Mul(pooled, pooled));
  };
  EXPECT_LT(GradCheck(f, {table, m}, 1e-5), 1e-7);
  auto h = [&] {
    Tensor picked = GatherCols(m, col_ids);
    return Sum(Mul(picked, picked));
  };
  EXPECT_LT(GradCheck(h, {m}, 1e-5), 1e-8);
}

TEST(OpGradients, Nonlinearities) {
  Rng rng(61);
  // Keep ReLU inputs away from the kink so central differences are valid.
  std::vector<double> vals(12);
  for (double &v : vals) {
    v = rng.Uniform(0.2, 1.5);
    if (rng.Bernoulli(0.5)) v = -v;
  }
  Tensor a = Tensor::WithData({3, 4}, vals, true);
  auto f = [&] { return Sum(Mul(Relu(a), Sigmoid(a))); };
  EXPECT_LT(GradCheck(f, {a}, 1e-6), 1e-6);
  auto g = [&] { return Sum(Silu(a)); };
  EXPECT_LT(GradCheck(g, {a}, 1e-6), 1e-7);
  Tensor pos = RandomParam({4}, rng, 0.5);
  for (double &v : pos.Data()) v = std::abs(v) + 0.5;
  auto h = [&] { return Sum(PowScalar(pos, -0.5)); };
  EXPECT_LT(GradCheck(h, {pos}, 1e-6), 1e-6);
}

TEST(OpGradients, SoftmaxFamilies) {
  Rng rng(67);
  Tensor a = RandomParam({3, 5}, rng, 2.0);
  Tensor w = RandomParam({3, 5}, rng);
  auto f = [&] { return Sum(Mul(SoftmaxRows(a), w)); };
  EXPECT_LT(GradCheck(f, {a, w}, 1e-5), 1e-6);
  auto g = [&] { return Sum(Mul(LogSoftmaxRows(a), w)); };
  EXPECT_LT(GradCheck(g, {a, w}, 1e-5), 1e-6);
}

TEST(OpGradients, LayerNorm) {
  Rng rng(71);
  Tensor x = RandomParam({4, 6}, rng, 2.0);
  Tensor gamma = RandomParam({6}, rng);
  Tensor beta = RandomParam({6}, rng);
  Tensor w = RandomParam({4, 6}, rng);
  auto f = [&] { return Sum(Mul(LayerNormOp(x, gamma, beta), w)); };
  EXPECT_LT(GradCheck(f, {x, gamma, beta}, 1e-5), 1e-6);
}

TEST(OpGradients, UnfoldAndDepthwiseConv) {
  Rng rng(73);
  Tensor x = RandomParam({7, 3}, rng);
  Tensor w = RandomParam({9, 2}, rng);  // 9 = kernel 3 * channels 3
  Tensor dw = RandomParam({3, 3}, rng);
  auto f = [&] {
    Tensor u = Unfold1d(x, 3, 2, 1);
    Tensor y = MatMul(u, w);
    return Sum(Mul(y, y));
  };
  EXPECT_LT(GradCheck(f, {x, w}, 1e-5), 1e-7);
  auto g = [&] {
    Tensor y = DepthwiseConv1d(x, dw);
    return Sum(Mul(y, y));
  };
  EXPECT_LT(GradCheck(g, {x, dw}, 1e-5), 1e-7);
}

// ---------------------------- op semantics --------------------------------

TEST(OpSemantics, Unfold1dLengthFormulaAndValues) {
  // kernel 3, stride 2, pad 1 halves the length with ceiling: 10 -> 5.
  Tensor x = Tensor::WithData({10, 1},
                              {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0});
  Tensor u = Unfold1d(x, 3, 2, 1);
  ASSERT_EQ(u.Rows(), 5u);
  ASSERT_EQ(u.Cols(), 3u);
  // First window is left-padded with one zero.
  EXPECT_DOUBLE_EQ(u(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(u(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(u(0, 2), 1.0);
  // Interior window at output index 2 covers inputs 3,4,5.
  EXPECT_DOUBLE_EQ(u(2, 0), 3.0);
  EXPECT_DOUBLE_EQ(u(2, 1), 4.0);
  EXPECT_DOUBLE_EQ(u(2, 2), 5.0);
  // Last window is right-padded: inputs 7,8,9 then out of range... check:
  EXPECT_DOUBLE_EQ(u(4, 0), 7.0);
  EXPECT_DOUBLE_EQ(u(4, 1), 8.0);
  EXPECT_DOUBLE_EQ(u(4, 2), 9.0);
}

TEST(OpSemantics, DepthwiseConvMatchesNaiveReference) {
  Rng rng(79);
  size_t t = 6, c = 2, k = 3;
  Tensor x = RandomParam({t, c}, rng);
  Tensor w = RandomParam({k, c}, rng);
  Tensor y = DepthwiseConv1d(x, w);
  for (size_t o = 0; o < t; ++o)
    for (size_t ch = 0; ch < c; ++ch) {
      double ref = 0.0;
      for (size_t j = 0; j < k; ++j) {
        long src = static_cast<long>(o + j) - 1;
        if (src < 0 || src >= static_cast<long>(t)) continue;
        ref += w(j, ch) * x(static_cast<size_t>(src), ch);
      }
      EXPECT_NEAR(y(o, ch), ref, 1e-12);
    }
}

TEST(OpSemantics, ShapeErrorsAreRejected) {
  Tensor a = Tensor::Zeros({2, 3});
  Tensor b = Tensor::Zeros({3, 2});
  EXPECT_THROW(Add(a, b), std::invalid_argument);
  EXPECT_THROW(MatMul(a, a), std::invalid_argument);
  EXPECT_THROW(Reshape(a, {4, 2}), std::invalid_argument);
  EXPECT_THROW(GatherRows(a, {5}), std::invalid_argument);
  EXPECT_THROW(Tensor::WithData({2, 2}, {1.0}), std::invalid_argument);
}

TEST(OpSemantics, WeightSharingAliasesStorage) {
  // Copying a Tensor handle shares the node: mutating one view is visible
  // through the other, the identity the tied embedding relies on.
  Tensor e = Tensor::WithData({2, 2}, {1.0, 2.0, 3.0, 4.0}, true);
  Tensor alias = e;
  alias.Data()[0] = 9.0;
  EXPECT_DOUBLE_EQ(e(0, 0), 9.0);
}

}  // namespace
}  // namespace mspst

// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "neuromoe/autodiff.hpp"
#include "neuromoe/error.hpp"
#include "support/gradcheck.hpp"
#include "support/op_cases.hpp"

namespace neuromoe {
namespace {

using testing::check_input_gradients;
using testing::project;
using testing::random_tensor;
using V = Var<double>;
using In = std::span<const V>;

constexpr double kTol = 1e-4;

TEST(Tensor, ShapeAndFill) {
  Tensor<double> t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.at(1, 2), 1.5);
  EXPECT_THROW(Tensor<double>(Shape{2, 0}), Error);
  EXPECT_THROW(Tensor<double>(Shape{2, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST(Ops, MatmulIdentity) {
  Tape<double> tape;
  auto i2 = tape.constant(Tensor<double>::from({2, 2}, {1, 0, 0, 1}));
  auto a = tape.constant(Tensor<double>::from({2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(ops::matmul(i2, a).value(), a.value());
}

TEST(Ops, MatmulDot) {
  Tape<double> tape;
  auto a = tape.constant(Tensor<double>::from({1, 2}, {1, 2}));
  auto b = tape.constant(Tensor<double>::from({2, 1}, {3, 4}));
  EXPECT_EQ(ops::matmul(a, b).value()[0], 11.0);
}

TEST(Ops, MatmulShapeMismatchNamesShapes) {
  Tape<double> tape;
  auto a = tape.constant(Tensor<double>({2, 3}));
  auto b = tape.constant(Tensor<double>({2, 3}));
  try {
    ops::matmul(a, b);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2,3]"), std::string::npos) << e.what();
  }
}

TEST(Ops, MatmulGradientOfSum) {
  Rng rng(1);
  auto r = check_input_gradients(
      [](Tape<double>&, In x) { return ops::sum(ops::matmul(x[0], x[1])); },
      {random_tensor({3, 3}, rng), random_tensor({3, 3}, rng)}, 2);
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

TEST(Ops, SoftmaxUniform) {
  Tape<double> tape;
  auto y = ops::softmax(tape.constant(Tensor<double>({1, 4})), 1).value();
  for (double v : y.values()) EXPECT_EQ(v, 0.25);
}

TEST(Ops, SoftmaxLargeLogitsStable) {
  Tape<double> tape;
  auto y = ops::softmax(tape.constant(Tensor<double>::from({1, 2}, {1000, 0})), 1).value();
  EXPECT_TRUE(y.all_finite());
  EXPECT_NEAR(y[0], 1.0, 1e-15);
  EXPECT_NEAR(y[1], 0.0, 1e-15);
}

TEST(Ops, SoftmaxMatchesLongDoubleOracle) {
  Tape<double> tape;
  auto y = ops::softmax(tape.constant(Tensor<double>::from({3}, {1, 2, 3})), 0).value();
  long double z = 0;
  for (int i = 1; i <= 3; ++i) z += std::exp(static_cast<long double>(i));
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(y[static_cast<std::size_t>(i)],
                static_cast<double>(std::exp(static_cast<long double>(i + 1)) / z), 1e-12);
}

TEST(Ops, SoftmaxSumsToOneAndIsPermutationEquivariant) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_tensor({5}, rng, -5, 5);
    Tensor<double> p({5});
    const std::size_t perm[5] = {3, 0, 4, 1, 2};
    for (std::size_t i = 0; i < 5; ++i) p[i] = x[perm[i]];
    Tape<double> tape;
    auto y = ops::softmax(tape.constant(x), 0).value();
    auto yp = ops::softmax(tape.constant(p), 0).value();
    double s = 0;
    for (double v : y.values()) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(yp[i], y[perm[i]], 1e-15);
  }
}

TEST(Ops, SoftmaxOverLeadingAxis) {
  Rng rng(4);
  auto r = check_input_gradients(
      [](Tape<double>&, In x) { return project(ops::softmax(x[0], 0), 5); },
      {random_tensor({4, 3}, rng, -2, 2)}, 6);
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Ops, Relu) {
  Tape<double> tape;
  auto y = ops::relu(tape.constant(Tensor<double>::from({3}, {-1, 0, 2}))).value();
  EXPECT_EQ(y, Tensor<double>::from({3}, {0, 0, 2}));
}

TEST(Ops, DropoutEvalIsIdentity) {
  Tape<double> tape;
  Rng rng(5), r2(5);
  auto x = tape.constant(random_tensor({4, 4}, r2));
  auto y = ops::dropout(x, 0.3, false, rng);
  EXPECT_EQ(y.id, x.id);
  EXPECT_EQ(y.value(), x.value());
}

TEST(Ops, DropoutPreservesExpectation) {
  Rng rng(11);
  Tensor<double> acc({3, 3});
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    Tape<double> tape(false);
    auto y = ops::dropout(tape.constant(Tensor<double>({3, 3}, 1.0)), 0.3, true, rng).value();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += y[i];
  }
  for (double v : acc.values()) {
    EXPECT_GE(v / draws, 0.97);
    EXPECT_LE(v / draws, 1.03);
  }
}

TEST(Ops, CrossEntropyValues) {
  Tape<double> tape;
  const int l0[] = {0};
  EXPECT_NEAR(ops::cross_entropy(tape.constant(Tensor<double>({1, 3})), l0).value()[0],
              std::log(3.0), 1e-12);
  auto confident = tape.constant(Tensor<double>::from({1, 3}, {10, -10, -10}));
  EXPECT_NEAR(ops::cross_entropy(confident, l0).value()[0], 0.0, 1e-8);
}

TEST(Ops, CrossEntropyShiftInvariant) {
  Rng rng(12);
  const int labels[] = {0, 2, 1, 1};
  for (double c : {-50.0, -1.0, 3.0, 200.0}) {
    auto x = random_tensor({4, 3}, rng, -3, 3);
    Tensor<double> shifted = x;
    for (auto& v : shifted.values()) v += c;
    Tape<double> tape(false);
    EXPECT_NEAR(ops::cross_entropy(tape.constant(x), labels).value()[0],
                ops::cross_entropy(tape.constant(shifted), labels).value()[0], 1e-9);
  }
}

TEST(Ops, CrossEntropyRejectsBadLabel) {
  Tape<double> tape;
  const int bad[] = {3};
  EXPECT_THROW(ops::cross_entropy(tape.constant(Tensor<double>({1, 3})), bad), ValidationError);
}

TEST(Ops, CrossEntropyGradient) {
  Rng rng(13);
  const std::vector<int> labels{0, 2, 1, 1};
  auto r = check_input_gradients(
      [&](Tape<double>&, In x) { return ops::cross_entropy(x[0], labels); },
      {random_tensor({4, 3}, rng, -2, 2)}, 14);
  EXPECT_LT(r.max_rel_error, 1e-5) << r.worst;
}

TEST(Backward, SumGivesOnes) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>::from({3}, {4, -1, 2}));
  tape.backward(ops::sum(x));
  EXPECT_EQ(tape.grad(x), Tensor<double>({3}, 1.0));
}

TEST(Backward, SquareGradient) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>::from({2}, {1, 2}));
  tape.backward(ops::sum(ops::mul(x, x)));
  EXPECT_EQ(tape.grad(x), Tensor<double>::from({2}, {2, 4}));
}

TEST(Backward, NonScalarLossIsContractError) {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({2}));
  EXPECT_THROW(tape.backward(x), ContractError);
}

TEST(Backward, ParameterGradientsAccumulate) {
  Parameter<double> p("w", Tensor<double>::from({2}, {1, 2}));
  for (int pass = 0; pass < 2; ++pass) {
    Tape<double> tape;
    auto w = tape.param(p);
    tape.backward(ops::sum(ops::mul(w, w)));
  }
  EXPECT_EQ(p.grad, Tensor<double>::from({2}, {4, 8}));
}

TEST(Backward, SharedParameterHasOneLeaf) {
  Parameter<double> p("w", Tensor<double>::from({1}, {3}));
  Tape<double> tape;
  auto a = tape.param(p);
  auto b = tape.param(p);
  EXPECT_EQ(a.id, b.id);
  tape.backward(ops::mul(a, b));
  EXPECT_EQ(p.grad[0], 6.0);
}

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const auto c = testing::op_cases()[GetParam()];
  auto r = testing::check_op(c, GetParam());
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_rel_error, kTol) << c.name << ": " << r.worst;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range<std::size_t>(0, testing::op_cases().size()),
                         [](const auto& info) { return std::string(testing::op_cases()[info.param].name); });

TEST(Attention, MatchesComposedOps) {
  Rng rng(31);
  const std::size_t n = 7, d = 12, heads = 3, dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto q = random_tensor({n, d}, rng), k = random_tensor({n, d}, rng),
       v = random_tensor({n, d}, rng);
  auto fused = [&](Tape<double>&, In x) {
    return project(ops::attention(x[0], x[1], x[2], heads, scale), 32);
  };
  auto composed = [&](Tape<double>&, In x) {
    std::vector<V> outs;
    for (std::size_t h = 0; h < heads; ++h) {
      auto qh = ops::slice(x[0], 1, h * dh, dh), kh = ops::slice(x[1], 1, h * dh, dh),
           vh = ops::slice(x[2], 1, h * dh, dh);
      outs.push_back(ops::matmul(ops::softmax(ops::matmul_nt(qh, kh, scale), 1), vh));
    }
    return project(ops::concat<double>(outs, 1), 32);
  };
  Tape<double> t1, t2;
  V a[3] = {t1.leaf(q), t1.leaf(k), t1.leaf(v)};
  V b[3] = {t2.leaf(q), t2.leaf(k), t2.leaf(v)};
  auto la = fused(t1, a), lb = composed(t2, b);
  EXPECT_NEAR(la.value()[0], lb.value()[0], 1e-12);
  t1.backward(la);
  t2.backward(lb);
  for (int i = 0; i < 3; ++i) {
    const auto ga = t1.grad(a[i]), gb = t2.grad(b[i]);
    for (std::size_t j = 0; j < ga.size(); ++j) EXPECT_NEAR(ga[j], gb[j], 1e-12);
  }
}

TEST(Attention, ProbabilitiesAreRowStochastic) {
  Rng rng(33);
  Tape<double> tape(false);
  std::vector<Tensor<double>> probs;
  auto x = tape.constant(random_tensor({5, 8}, rng, -3, 3));
  ops::attention(x, x, x, 4, 0.5, &probs);
  ASSERT_EQ(probs.size(), 4u);
  for (const auto& p : probs)
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 5; ++c) s += p.at(r, c);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Ops, FloatAndDoubleAgree) {
  Rng rng(40);
  auto a = random_tensor({4, 6}, rng), b = random_tensor({6, 3}, rng);
  Tape<double> td(false);
  Tape<float> tf(false);
  auto yd = ops::softmax(ops::matmul(td.constant(a), td.constant(b)), 1).value();
  auto yf = ops::softmax(ops::matmul(tf.constant(a.cast<float>()), tf.constant(b.cast<float>())), 1)
                .value();
  for (std::size_t i = 0; i < yd.size(); ++i) EXPECT_NEAR(yd[i], yf[i], 1e-5);
}

}  // namespace
}  // namespace neuromoe

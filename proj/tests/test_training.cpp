// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "neuromoe/error.hpp"
#include "neuromoe/training.hpp"
#include "support/fixtures.hpp"
#include "support/model_gradcheck.hpp"

namespace neuromoe {
namespace {

TEST(CosineLr, Endpoints) {
  TrainConfig c;
  EXPECT_EQ(cosine_lr(0, c), 0.001);
  EXPECT_EQ(cosine_lr(c.epochs - 1, c), 0.0);
  EXPECT_THROW(cosine_lr(c.epochs, c), ValidationError);
}

TEST(CosineLr, MidpointOfOddSchedule) {
  TrainConfig c;
  c.epochs = 101;
  EXPECT_NEAR(cosine_lr(50, c), 0.0005, 1e-12);
}

TEST(CosineLr, MatchesClosedFormAndIsNonincreasing) {
  TrainConfig c;
  c.lr_min = 1e-5;
  double prev = cosine_lr(0, c);
  for (std::size_t e = 0; e < c.epochs; ++e) {
    const double lr = cosine_lr(e, c);
    const double expected =
        c.lr_min + 0.5 * (c.lr_init - c.lr_min) *
                       (1 + std::cos(std::numbers::pi * static_cast<double>(e) / 99.0));
    EXPECT_NEAR(lr, expected, 1e-15);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(CosineLr, SingleEpochStaysAtInitial) {
  TrainConfig c;
  c.epochs = 1;
  EXPECT_EQ(cosine_lr(0, c), c.lr_init);
}

struct Scalar {
  ParameterStore<double> store;
  Parameter<double>* x;
  explicit Scalar(double v) : x(&store.create("x", Tensor<double>::from({1}, {v}))) {}
};

TEST(Adam, ZeroGradientLeavesParameters) {
  Scalar s(3.0);
  auto params = s.store.all();
  auto state = make_adam_state<double>(params);
  adam_step<double>(params, state, 0.001, TrainConfig{});
  EXPECT_EQ(s.x->value[0], 3.0);
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, ZeroGradientDecaysMoments) {
  Scalar s(3.0);
  auto params = s.store.all();
  auto state = make_adam_state<double>(params);
  state.m[0][0] = 0.5;
  state.v[0][0] = 0.25;
  adam_step<double>(params, state, 0.001, TrainConfig{});
  EXPECT_DOUBLE_EQ(state.m[0][0], 0.9 * 0.5);
  EXPECT_DOUBLE_EQ(state.v[0][0], 0.999 * 0.25);
}

TEST(Adam, FirstStepWithUnitGradient) {
  Scalar s(0.0);
  auto params = s.store.all();
  auto state = make_adam_state<double>(params);
  s.x->grad[0] = 1.0;
  const double lr = 0.001;
  adam_step<double>(params, state, lr, TrainConfig{});
  EXPECT_NEAR(s.x->value[0], -lr / (1.0 + 1e-8), 1e-18);
}

TEST(Adam, QuadraticBowlConverges) {
  Scalar s(5.0);
  auto params = s.store.all();
  auto state = make_adam_state<double>(params);
  for (int i = 0; i < 200; ++i) {
    s.x->grad[0] = 2 * s.x->value[0];
    adam_step<double>(params, state, 0.1, TrainConfig{});
  }
  EXPECT_LT(std::abs(s.x->value[0]), 0.1);
}

TEST(Adam, MismatchedStateIsContractError) {
  Scalar s(1.0);
  auto params = s.store.all();
  AdamState<double> empty;
  EXPECT_THROW(adam_step<double>(params, empty, 0.001, TrainConfig{}), ContractError);
}

TEST(Accumulation, AveragedMicroBatchesEqualFullBatch) {
  auto cfg = testing::small_run_config();
  cfg.set("counts", "12,12,12");
  auto p = testing::small_problem<double>(cfg);
  ASSERT_GE(p.train.size(), 28u);
  std::vector<Sample<double>> train(p.train.begin(), p.train.begin() + 28);
  train.insert(train.end(), p.train.begin(), p.train.begin() + 4);
  ASSERT_EQ(train.size(), 32u);

  NeuroMoE<double> model(p.cfg.model, 7);
  model.parameters().zero_grad();
  accumulate_gradients<double>(model, testing::pointers(train, 0, 32), 0.0, false, nullptr);
  std::vector<Tensor<double>> full;
  for (auto* q : model.parameters().all()) full.push_back(q->grad);

  model.parameters().zero_grad();
  for (std::size_t k = 0; k < 4; ++k)
    accumulate_gradients<double>(model, testing::pointers(train, 8 * k, 8), 0.0, false, nullptr);
  scale_gradients(model.parameters(), 0.25);
  double worst = 0;
  std::size_t i = 0;
  for (auto* q : model.parameters().all()) {
    for (std::size_t j = 0; j < q->grad.size(); ++j)
      worst = std::max(worst, std::abs(q->grad[j] - full[i][j]));
    ++i;
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(FullModel, CompositeLossMatchesFiniteDifferences) {
  const auto r = testing::full_model_gradcheck(17);
  EXPECT_GT(r.checked, 500u);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
}

TEST(Train, RejectsEmptySets) {
  auto p = testing::small_problem<float>(testing::small_run_config());
  std::vector<Sample<float>> none;
  EXPECT_THROW(train<float>(none, p.test, p.cfg.model, p.cfg.train), ValidationError);
  EXPECT_THROW(train<float>(p.train, none, p.cfg.model, p.cfg.train), ValidationError);
}

TEST(Train, NonFiniteLossNamesEpochAndBatch) {
  auto p = testing::small_problem<float>(testing::small_run_config());
  p.train[0].features[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train<float>(p.train, p.test, p.cfg.model, p.cfg.train);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 0, batch"), std::string::npos) << e.what();
  }
}

TEST(Train, UniformModeWithoutRegularizerNeverTouchesGate) {
  auto cfg = testing::small_run_config();
  cfg.set("mode", "uniform");
  cfg.set("lambda", "0");
  auto p = testing::small_problem<float>(cfg);
  NeuroMoE<float> init(p.cfg.model, p.cfg.train.seed);
  const auto before = snapshot(init);
  const auto r = train<float>(p.train, p.test, p.cfg.model, p.cfg.train);
  std::size_t gate_params = 0, changed_other = 0;
  for (std::size_t i = 0; i < before.params.size(); ++i) {
    const auto& [name, value] = before.params[i];
    ASSERT_EQ(name, r.best.params[i].first);
    const bool same = value == r.best.params[i].second;
    if (name.starts_with("gate.")) {
      ++gate_params;
      EXPECT_TRUE(same) << name;
    } else if (!same) {
      ++changed_other;
    }
  }
  EXPECT_GT(gate_params, 0u);
  EXPECT_GT(changed_other, 0u);
  for (const auto& e : r.history.epochs)
    for (double g : e.mean_gate) EXPECT_EQ(g, 0.25);
}

TEST(Train, IdenticalSeedsGiveIdenticalHistories) {
  auto p = testing::small_problem<float>(testing::small_run_config());
  const auto a = train<float>(p.train, p.test, p.cfg.model, p.cfg.train);
  const auto b = train<float>(p.train, p.test, p.cfg.model, p.cfg.train);
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  for (std::size_t i = 0; i < a.history.epochs.size(); ++i) {
    const auto &x = a.history.epochs[i], &y = b.history.epochs[i];
    EXPECT_EQ(x.train_loss, y.train_loss);
    EXPECT_EQ(x.train_ce, y.train_ce);
    EXPECT_EQ(x.train_balance, y.train_balance);
    EXPECT_EQ(x.test_accuracy, y.test_accuracy);
    EXPECT_EQ(x.mean_gate, y.mean_gate);
  }
  EXPECT_EQ(encode_checkpoint(a.best), encode_checkpoint(b.best));
}

TEST(Train, HistoryRecordsScheduleAndBestEpoch) {
  auto cfg = testing::small_run_config();
  cfg.set("epochs", "4");
  auto p = testing::small_problem<float>(cfg);
  std::size_t callbacks = 0;
  const auto r = train<float>(p.train, p.test, p.cfg.model, p.cfg.train,
                              [&](const EpochRecord&) { ++callbacks; });
  ASSERT_EQ(r.history.epochs.size(), 4u);
  EXPECT_EQ(callbacks, 4u);
  double best = 0;
  for (const auto& e : r.history.epochs) {
    EXPECT_EQ(e.lr, cosine_lr(e.epoch, p.cfg.train));
    EXPECT_NEAR(e.train_loss, e.train_ce + p.cfg.train.lambda_balance * e.train_balance, 1e-6);
    best = std::max(best, e.test_accuracy);
  }
  EXPECT_EQ(r.history.best_test_accuracy, best);
  EXPECT_EQ(r.history.epochs[r.history.best_epoch].test_accuracy, best);

  NeuroMoE<float> restored(p.cfg.model, 0);
  restore(restored, r.best);
  const auto pred = restored.predict(p.test);
  EXPECT_NEAR(compute_metrics(pred.labels, pred.predicted).accuracy, best, 1e-12);
}

TEST(Train, LossDecreasesOnSeparableSet) {
  auto cfg = testing::small_run_config();
  cfg.set("signal_scale", "3");
  cfg.set("counts", "12,12,12");
  cfg.set("epochs", "21");
  double first = 0, later = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    cfg.set("seed", std::to_string(seed));
    auto p = testing::small_problem<float>(cfg, seed);
    const auto r = train<float>(p.train, p.test, p.cfg.model, p.cfg.train);
    first += r.history.epochs[1].train_loss;
    later += r.history.epochs[20].train_loss;
  }
  EXPECT_LT(later, first);
}

}  // namespace
}  // namespace neuromoe

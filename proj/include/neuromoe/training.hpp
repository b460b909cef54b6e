// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "neuromoe/checkpoint.hpp"
#include "neuromoe/config.hpp"
#include "neuromoe/metrics.hpp"
#include "neuromoe/model.hpp"

namespace neuromoe {

/// lr_min + (lr_init - lr_min)(1 + cos(pi * epoch / (epochs - 1))) / 2.
/// A single-epoch schedule stays at lr_init.
double cosine_lr(std::size_t epoch, const TrainConfig& cfg);

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  std::uint64_t t = 0;
};

template <typename T>
AdamState<T> make_adam_state(std::span<Parameter<T>* const> params);

/// One bias-corrected Adam update. Gradients are left for the caller to zero.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr,
               const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_ce = 0.0;
  double train_balance = 0.0;
  double train_accuracy = 0.0;  // from the dropout-on training passes
  double test_accuracy = 0.0;
  double test_f1 = 0.0;
  std::vector<double> mean_gate;  // over training passes, per active expert
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_test_accuracy = 0.0;
};

struct TrainResult {
  Checkpoint best;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam + cosine schedule + gradient accumulation over CE + lambda * R.
/// Returns the parameters of the epoch with the highest test accuracy (first
/// one on ties).
template <typename T>
TrainResult train(const std::vector<Sample<T>>& train_set, const std::vector<Sample<T>>& test_set,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch = {});

/// Adds the gradient of one micro-batch loss into the parameter gradients and
/// returns the loss terms as doubles {total, ce, balance}.
template <typename T>
std::array<double, 3> accumulate_gradients(NeuroMoE<T>& model,
                                           std::span<const Sample<T>* const> batch,
                                           double lambda, bool training, Rng* dropout_rng);

template <typename T>
void scale_gradients(ParameterStore<T>& store, T factor);

}  // namespace neuromoe

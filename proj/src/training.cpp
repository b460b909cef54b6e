// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/training.hpp"

#include <cmath>
#include <numbers>

#include "neuromoe/error.hpp"

namespace neuromoe {

double cosine_lr(std::size_t epoch, const TrainConfig& cfg) {
  if (epoch >= cfg.epochs)
    throw ValidationError("cosine_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(cfg.epochs) + ")");
  if (cfg.epochs == 1 || epoch == 0) return cfg.lr_init;
  if (epoch == cfg.epochs - 1) return cfg.lr_min;
  const double ratio = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
  return cfg.lr_min + 0.5 * (cfg.lr_init - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * ratio));
}

template <typename T>
AdamState<T> make_adam_state(std::span<Parameter<T>* const> params) {
  AdamState<T> s;
  for (auto* p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr,
               const TrainConfig& cfg) {
  if (state.m.size() != params.size())
    throw ContractError("adam_step: optimizer state holds " + std::to_string(state.m.size()) +
                        " moments for " + std::to_string(params.size()) + " parameters");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i]->grad.shape() != params[i]->value.shape() ||
        state.m[i].shape() != params[i]->value.shape())
      throw ContractError("adam_step: missing or misshapen gradient for " + params[i]->name);
  ++state.t;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* w = params[i]->value.data();
    const T* g = params[i]->grad.data();
    T* m = state.m[i].data();
    T* v = state.v[i].data();
    const std::size_t n = params[i]->value.size();
    for (std::size_t k = 0; k < n; ++k) {
      const double gk = static_cast<double>(g[k]);
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * gk;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double step = lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.adam_eps);
      w[k] = static_cast<T>(static_cast<double>(w[k]) - step);
    }
  }
}

template <typename T>
std::array<double, 3> accumulate_gradients(NeuroMoE<T>& model,
                                           std::span<const Sample<T>* const> batch,
                                           double lambda, bool training, Rng* dropout_rng) {
  std::vector<int> labels;
  labels.reserve(batch.size());
  for (const auto* s : batch) labels.push_back(s->label);
  Tape<T> tape;
  auto fwd = model.forward(tape, batch, training, dropout_rng);
  auto terms = model.loss(fwd, labels, lambda);
  tape.backward(terms.total);
  return {static_cast<double>(terms.total.value()[0]),
          static_cast<double>(terms.cross_entropy.value()[0]),
          static_cast<double>(terms.balance.value()[0])};
}

template <typename T>
void scale_gradients(ParameterStore<T>& store, T factor) {
  for (auto* p : store.all())
    for (auto& g : p->grad.values()) g *= factor;
}

template <typename T>
TrainResult train(const std::vector<Sample<T>>& train_set, const std::vector<Sample<T>>& test_set,
                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw ValidationError("train: empty training set");
  if (test_set.empty()) throw ValidationError("train: empty test set");
  NeuroMoE<T> model(model_cfg, cfg.seed);
  auto params = model.parameters().all();
  auto adam = make_adam_state<T>(params);
  model.parameters().zero_grad();

  const Rng root(cfg.seed);
  const Rng shuffle_root = root.derive("shuffle");
  const Rng dropout_root = root.derive("dropout");
  const std::size_t E = model.active_experts().size();

  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cosine_lr(epoch, cfg);
    rec.mean_gate.assign(E, 0.0);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle = shuffle_root.derive(epoch);
    shuffle.shuffle(order);
    Rng dropout = dropout_root.derive(epoch);

    std::size_t pending = 0, correct = 0, batch_index = 0;
    double loss_sum = 0.0, ce_sum = 0.0, reg_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      std::vector<const Sample<T>*> batch;
      std::vector<int> labels;
      for (std::size_t i = 0; i < n; ++i) {
        batch.push_back(&train_set[order[start + i]]);
        labels.push_back(batch.back()->label);
      }
      Tape<T> tape;
      auto fwd = model.forward(tape, batch, true, &dropout);
      auto terms = model.loss(fwd, labels, cfg.lambda_balance);
      const double total = static_cast<double>(terms.total.value()[0]);
      if (!std::isfinite(total))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      tape.backward(terms.total);

      const double w = static_cast<double>(n);
      loss_sum += total * w;
      ce_sum += static_cast<double>(terms.cross_entropy.value()[0]) * w;
      reg_sum += static_cast<double>(terms.balance.value()[0]) * w;
      const auto& logits = fwd.logits.value();
      const auto& gate = fwd.gate.value();
      for (std::size_t b = 0; b < n; ++b) {
        std::vector<double> row(logits.dim(1));
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = static_cast<double>(logits.at(b, c));
        if (argmax(row) == labels[b]) ++correct;
        for (std::size_t e = 0; e < E; ++e) rec.mean_gate[e] += static_cast<double>(gate.at(b, e));
      }

      const bool last = start + n >= order.size();
      if (++pending == cfg.accumulation_steps || last) {
        if (pending > 1) scale_gradients(model.parameters(), T(1) / static_cast<T>(pending));
        adam_step<T>(params, adam, rec.lr, cfg);
        model.parameters().zero_grad();
        pending = 0;
      }
    }
    const double count = static_cast<double>(order.size());
    rec.train_loss = loss_sum / count;
    rec.train_ce = ce_sum / count;
    rec.train_balance = reg_sum / count;
    rec.train_accuracy = static_cast<double>(correct) / count;
    for (auto& g : rec.mean_gate) g /= count;

    const auto pred = model.predict(test_set);
    const auto m = compute_metrics(pred.labels, pred.predicted);
    rec.test_accuracy = m.accuracy;
    rec.test_f1 = m.f1_macro;
    if (epoch == 0 || rec.test_accuracy > result.history.best_test_accuracy) {
      result.history.best_epoch = epoch;
      result.history.best_test_accuracy = rec.test_accuracy;
      result.best = snapshot(model);
    }
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

#define NEUROMOE_INSTANTIATE_TRAINING(T)                                                   \
  template AdamState<T> make_adam_state<T>(std::span<Parameter<T>* const>);                \
  template void adam_step<T>(std::span<Parameter<T>* const>, AdamState<T>&, double,        \
                             const TrainConfig&);                                          \
  template std::array<double, 3> accumulate_gradients<T>(                                  \
      NeuroMoE<T>&, std::span<const Sample<T>* const>, double, bool, Rng*);                \
  template void scale_gradients<T>(ParameterStore<T>&, T);                                 \
  template TrainResult train<T>(const std::vector<Sample<T>>&, const std::vector<Sample<T>>&, \
                                const ModelConfig&, const TrainConfig&, const EpochCallback&);

NEUROMOE_INSTANTIATE_TRAINING(float)
NEUROMOE_INSTANTIATE_TRAINING(double)

}  // namespace neuromoe

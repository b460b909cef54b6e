// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/moe.hpp"

#include "neuromoe/error.hpp"

namespace neuromoe {

template <typename T>
Expert<T>::Expert(ParameterStore<T>& store, ExpertId id, std::size_t in_dim,
                  std::size_t hidden, std::size_t num_classes, Rng& rng)
    : id_(id) {
  const std::string prefix = std::string("expert.") + to_string(id);
  fc0_ = Linear<T>(store, prefix + ".fc0", in_dim, hidden, rng);
  fc1_ = Linear<T>(store, prefix + ".fc1", hidden, num_classes, rng);
}

template <typename T>
Var<T> Expert<T>::forward(Tape<T>& tape, Var<T> embedding) const {
  const auto& s = embedding.shape();
  if (s.size() != 2 || s[1] != fc0_.in_features())
    throw ValidationError(std::string("expert.") + to_string(id_) + " expects [B, " +
                          std::to_string(fc0_.in_features()) + "] embeddings, got " +
                          shape_str(s));
  return fc1_(tape, ops::relu(fc0_(tape, embedding)));
}

template <typename T>
GateNetwork<T>::GateNetwork(ParameterStore<T>& store, std::size_t feature_dim,
                            const std::vector<std::size_t>& hidden, std::size_t num_experts,
                            double dropout, Rng& rng)
    : dropout_(dropout) {
  std::size_t in = feature_dim;
  std::size_t idx = 0;
  for (auto h : hidden) {
    layers_.emplace_back(store, "gate.fc" + std::to_string(idx++), in, h, rng);
    in = h;
  }
  layers_.emplace_back(store, "gate.fc" + std::to_string(idx), in, num_experts, rng);
}

template <typename T>
Var<T> GateNetwork<T>::forward(Tape<T>& tape, Var<T> features, bool training,
                               Rng* dropout_rng) const {
  const auto& s = features.shape();
  if (s.size() != 2 || s[1] != feature_dim())
    throw ValidationError("gate expects [B, " + std::to_string(feature_dim()) +
                          "] clinical features, got " + shape_str(s));
  if (training && dropout_ > 0.0 && !dropout_rng)
    throw ContractError("gate: training mode needs a dropout generator");
  auto h = features;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    h = ops::relu(layers_[i](tape, h));
    if (training) h = ops::dropout(h, dropout_, true, *dropout_rng);
  }
  return ops::softmax(layers_.back()(tape, h), 1);
}

template <typename T>
Var<T> fuse(std::span<const Var<T>> outputs, Var<T> weights) {
  const auto& ws = weights.shape();
  if (ws.size() != 2 || ws[1] != outputs.size())
    throw ValidationError("fuse: " + std::to_string(outputs.size()) +
                          " expert outputs for gate weights " + shape_str(ws));
  const Shape& first = outputs[0].shape();
  if (first.size() != 2 || first[0] != ws[0])
    throw DimensionError("fuse: expert logits " + shape_str(first) +
                         " do not match gate batch " + shape_str(ws));
  Var<T> acc;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].shape() != first)
      throw DimensionError("fuse: expert logits " + shape_str(outputs[i].shape()) + " vs " +
                           shape_str(first));
    auto term = ops::scale_rows(outputs[i], ops::slice(weights, 1, i, 1));
    acc = i == 0 ? term : ops::add(acc, term);
  }
  return acc;
}

template <typename T>
Var<T> balance_regularizer(Var<T> weights) {
  const auto& ws = weights.shape();
  if (ws.size() != 2) throw DimensionError("balance_regularizer expects [N, E], got " + shape_str(ws));
  const T target = T(1) / static_cast<T>(ws[1]);
  auto dev = ops::add_scalar(ops::mean_axis(weights, 0), -target);
  return ops::mean(ops::mul(dev, dev));
}

template <typename T>
Tensor<T> uniform_gate(std::size_t batch, std::size_t num_experts) {
  return Tensor<T>({batch, num_experts}, T(1) / static_cast<T>(num_experts));
}

template <typename T>
MoeBlock<T>::MoeBlock(ParameterStore<T>& store, const ModelConfig& cfg,
                      const std::vector<std::size_t>& expert_input_dims, Rng& rng)
    : mode_(cfg.mode),
      gate_([&]() -> GateNetwork<T> {
        // Experts are created after the gate; keep construction order stable.
        Rng gate_rng = rng.derive("gate");
        return GateNetwork<T>(store, cfg.feature_dim, cfg.gate_hidden,
                              cfg.active_experts().size(), cfg.gate_dropout, gate_rng);
      }()) {
  const auto active = cfg.active_experts();
  if (expert_input_dims.size() != active.size())
    throw ContractError("MoeBlock: one input dimension per active expert required");
  for (std::size_t i = 0; i < active.size(); ++i) {
    Rng er = rng.derive(std::string("expert.") + to_string(active[i]));
    experts_.emplace_back(store, active[i], expert_input_dims[i], cfg.expert_hidden,
                          cfg.num_classes, er);
  }
}

template <typename T>
MoeOutput<T> MoeBlock<T>::forward(Tape<T>& tape, std::span<const Var<T>> embeddings,
                                  Var<T> features, bool training, Rng* dropout_rng) const {
  if (embeddings.size() != experts_.size())
    throw ValidationError("moe: " + std::to_string(embeddings.size()) + " embeddings for " +
                          std::to_string(experts_.size()) + " active experts");
  MoeOutput<T> out;
  for (std::size_t i = 0; i < experts_.size(); ++i)
    out.expert_logits.push_back(experts_[i].forward(tape, embeddings[i]));
  const std::size_t batch = out.expert_logits[0].shape()[0];
  if (mode_ == GateMode::Gated)
    out.gate = gate_.forward(tape, features, training, dropout_rng);
  else
    out.gate = tape.constant(uniform_gate<T>(batch, experts_.size()));
  out.fused = fuse<T>(out.expert_logits, out.gate);
  return out;
}

template Var<float> fuse<float>(std::span<const Var<float>>, Var<float>);
template Var<double> fuse<double>(std::span<const Var<double>>, Var<double>);
template Var<float> balance_regularizer<float>(Var<float>);
template Var<double> balance_regularizer<double>(Var<double>);
template Tensor<float> uniform_gate<float>(std::size_t, std::size_t);
template Tensor<double> uniform_gate<double>(std::size_t, std::size_t);
template class Expert<float>;
template class Expert<double>;
template class GateNetwork<float>;
template class GateNetwork<double>;
template class MoeBlock<float>;
template class MoeBlock<double>;

}  // namespace neuromoe

// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "neuromoe/autodiff.hpp"
#include "neuromoe/config.hpp"
#include "neuromoe/layers.hpp"

namespace neuromoe {

/// Two-layer FFN mapping one modality embedding to class logits; parameters
/// under "expert.<name>".
template <typename T>
class Expert {
 public:
  Expert(ParameterStore<T>& store, ExpertId id, std::size_t in_dim, std::size_t hidden,
         std::size_t num_classes, Rng& rng);

  /// [B, in_dim] -> [B, num_classes]
  Var<T> forward(Tape<T>& tape, Var<T> embedding) const;
  ExpertId id() const noexcept { return id_; }
  std::size_t input_dim() const noexcept { return fc0_.in_features(); }

 private:
  ExpertId id_;
  Linear<T> fc0_, fc1_;
};

/// Clinical-feature driven gate: hidden ReLU + dropout layers, then a softmax
/// over the active experts. Parameters under "gate".
template <typename T>
class GateNetwork {
 public:
  GateNetwork(ParameterStore<T>& store, std::size_t feature_dim,
              const std::vector<std::size_t>& hidden, std::size_t num_experts, double dropout,
              Rng& rng);

  /// [B, feature_dim] -> [B, E], rows on the probability simplex.
  Var<T> forward(Tape<T>& tape, Var<T> features, bool training, Rng* dropout_rng) const;
  std::size_t num_experts() const noexcept { return layers_.back().out_features(); }
  std::size_t feature_dim() const noexcept { return layers_.front().in_features(); }
  const Linear<T>& output_layer() const { return layers_.back(); }

 private:
  double dropout_;
  std::vector<Linear<T>> layers_;
};

/// P_out[b] = sum_i w[b,i] * P_i[b]. `outputs` holds one [B, C] logit matrix
/// per expert, `weights` is [B, E].
template <typename T>
Var<T> fuse(std::span<const Var<T>> outputs, Var<T> weights);

/// (1/E) * sum_k (mean_j W[j,k] - 1/E)^2 for a gate matrix W [N, E].
template <typename T>
Var<T> balance_regularizer(Var<T> weights);

/// Fixed 1/E weights for the ungated ablation.
template <typename T>
Tensor<T> uniform_gate(std::size_t batch, std::size_t num_experts);

template <typename T>
struct MoeOutput {
  Var<T> fused;                      // [B, C]
  Var<T> gate;                       // [B, E]
  std::vector<Var<T>> expert_logits; // E x [B, C]
};

/// Experts + gate for the active expert set of a ModelConfig.
template <typename T>
class MoeBlock {
 public:
  MoeBlock(ParameterStore<T>& store, const ModelConfig& cfg,
           const std::vector<std::size_t>& expert_input_dims, Rng& rng);

  /// `embeddings[i]` feeds the i-th active expert and must be [B, in_i].
  MoeOutput<T> forward(Tape<T>& tape, std::span<const Var<T>> embeddings, Var<T> features,
                       bool training, Rng* dropout_rng) const;

  GateMode mode() const noexcept { return mode_; }
  std::size_t num_experts() const noexcept { return experts_.size(); }
  const std::vector<Expert<T>>& experts() const noexcept { return experts_; }
  const GateNetwork<T>& gate() const noexcept { return gate_; }

 private:
  GateMode mode_;
  std::vector<Expert<T>> experts_;
  GateNetwork<T> gate_;
};

extern template class Expert<float>;
extern template class Expert<double>;
extern template class GateNetwork<float>;
extern template class GateNetwork<double>;
extern template class MoeBlock<float>;
extern template class MoeBlock<double>;

}  // namespace neuromoe

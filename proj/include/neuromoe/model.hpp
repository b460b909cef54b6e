// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuromoe/autodiff.hpp"
#include "neuromoe/config.hpp"
#include "neuromoe/data.hpp"
#include "neuromoe/encoders.hpp"
#include "neuromoe/moe.hpp"

namespace neuromoe {

/// A normalized subject converted to model precision, with every active
/// modality already collapsed and patchified.
template <typename T>
struct Sample {
  std::string subject_id;
  int label = 0;
  std::array<Tensor<T>, 3> patches;  // indexed by Modality; unused ones stay {1}
  std::vector<T> features;
};

template <typename T>
std::vector<Sample<T>> prepare_samples(std::span<const NormalizedRecord> records,
                                       const ModelConfig& cfg);

template <typename T>
struct ForwardResult {
  Var<T> logits;  // [B, C]
  Var<T> gate;    // [B, E]
  std::vector<Var<T>> expert_logits;
};

template <typename T>
struct LossTerms {
  Var<T> total;
  Var<T> cross_entropy;
  Var<T> balance;
};

/// Stateless result of an eval-mode pass over a sample list.
struct Predictions {
  std::vector<int> labels;
  std::vector<int> predicted;
  std::vector<std::vector<double>> logits;  // [n][C]
  std::vector<std::vector<double>> gate;    // [n][E], rows renormalized in double
};

/// Full network for a ModelConfig: one encoder per active modality, one
/// expert per active slot, gate and fusion.
template <typename T>
class NeuroMoE {
 public:
  NeuroMoE(const ModelConfig& cfg, std::uint64_t seed);
  NeuroMoE(const NeuroMoE&) = delete;
  NeuroMoE& operator=(const NeuroMoE&) = delete;

  const ModelConfig& config() const noexcept { return cfg_; }
  ParameterStore<T>& parameters() noexcept { return store_; }
  const ParameterStore<T>& parameters() const noexcept { return store_; }
  const std::vector<ExpertId>& active_experts() const noexcept { return active_; }
  const MoeBlock<T>& moe() const { return *moe_; }

  /// Forward pass over a batch. `dropout_rng` is required when training.
  ForwardResult<T> forward(Tape<T>& tape, std::span<const Sample<T>* const> batch,
                           bool training, Rng* dropout_rng) const;
  /// cross_entropy(logits) + lambda * balance_regularizer(gate).
  LossTerms<T> loss(const ForwardResult<T>& fwd, std::span<const int> labels,
                    double lambda) const;

  /// Eval-mode predictions in fixed-size chunks so results never depend on
  /// how the caller batches. Ties in argmax go to the lowest class index.
  Predictions predict(std::span<const Sample<T>> samples) const;

  static constexpr std::size_t kEvalChunk = 8;

 private:
  ModelConfig cfg_;
  std::vector<ExpertId> active_;
  ParameterStore<T> store_;
  std::array<std::unique_ptr<MriEncoder<T>>, 3> mri_;
  std::unique_ptr<ClinicalEncoder<T>> clinical_;
  std::unique_ptr<MoeBlock<T>> moe_;
};

/// argmax with ties resolved to the lowest index.
int argmax(std::span<const double> values);

extern template class NeuroMoE<float>;
extern template class NeuroMoE<double>;

}  // namespace neuromoe

// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "neuromoe/data.hpp"
#include "neuromoe/metrics.hpp"
#include "neuromoe/model.hpp"
#include "neuromoe/run_config.hpp"
#include "neuromoe/training.hpp"

namespace neuromoe {

struct Evaluation {
  Metrics metrics;
  Predictions predictions;
};

/// Eval-mode (dropout off) argmax predictions and metrics.
template <typename T>
Evaluation evaluate(const NeuroMoE<T>& model, std::span<const Sample<T>> samples);

struct UtilizationReport {
  std::vector<std::string> experts;       // active expert names, fusion order
  std::vector<double> mean;               // per expert
  std::vector<std::string> subject_ids;
  std::vector<std::vector<double>> rows;  // per subject gate weights
  bool static_weights = false;            // uniform mode: every weight is 1/E
  bool regularized = false;               // trained with lambda > 0

  std::string to_csv() const;
  /// Standalone bar chart of the per-expert means.
  std::string to_svg() const;
};

template <typename T>
UtilizationReport utilization_report(const NeuroMoE<T>& model,
                                     std::span<const Sample<T>> samples, double lambda);

/// Stratified split + train-only preprocessing for one seed.
struct PreparedSplit {
  CohortSplit split;
  PreprocessStats stats;
  std::vector<NormalizedRecord> train, test;
  std::uint32_t train_hash = 0, test_hash = 0;
};

PreparedSplit prepare_split(std::span<const SubjectRecord> cohort, double train_fraction,
                            std::uint64_t seed);

/// Outcome of one train + evaluate run. `evaluation` re-scores the restored
/// best checkpoint on the test split.
struct ExperimentResult {
  ModelConfig model;
  TrainResult training;
  Evaluation evaluation;
  UtilizationReport utilization;
};

/// Trains on `data.train`, selects on `data.test`, at the precision requested by
/// `train_cfg`. The model's feature_dim is taken from the fitted stats.
ExperimentResult run_experiment(const PreparedSplit& data, ModelConfig model_cfg,
                                const TrainConfig& train_cfg, const EpochCallback& on_epoch = {});

/// Re-evaluates a saved checkpoint on the test split of `data`.
Evaluation evaluate_checkpoint(const PreparedSplit& data, ModelConfig model_cfg,
                               Precision precision, const Checkpoint& ckpt,
                               UtilizationReport* utilization = nullptr, double lambda = 0.0);

/// The six ablation configurations, in report order.
const std::vector<std::string>& ablation_names();
/// Applies an ablation configuration (by name) to a base model config.
ModelConfig ablation_config(const ModelConfig& base, const std::string& name);

struct AblationRun {
  std::uint64_t seed = 0;
  Metrics metrics;
  std::uint32_t train_hash = 0, test_hash = 0;
  std::size_t best_epoch = 0;
  std::vector<double> mean_gate;
};

struct AblationResult {
  std::string name;
  std::vector<AblationRun> runs;
  double mean_accuracy = 0.0, sd_accuracy = 0.0;
  double mean_f1 = 0.0, sd_f1 = 0.0;
};

using AblationProgress = std::function<void(const std::string& name, std::uint64_t seed,
                                            const AblationRun& run)>;

/// Trains and evaluates every requested configuration (all six when
/// `names` is empty) on one shared split per seed.
std::vector<AblationResult> run_ablation(std::span<const SubjectRecord> cohort,
                                         const RunConfig& base,
                                         std::span<const std::uint64_t> seeds,
                                         const std::vector<std::string>& names = {},
                                         const AblationProgress& progress = {});

/// Sample mean and SD (n - 1 denominator; 0 for a single value).
std::pair<double, double> mean_sd(std::span<const double> values);

}  // namespace neuromoe

// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "neuromoe/evaluation.hpp"
#include "neuromoe/run_config.hpp"

namespace neuromoe {

/// The ablation row a model config corresponds to, or "custom".
std::string config_label(const ModelConfig& cfg);

/// Metrics table: one row per (config, seed), then a mean and an sd row per
/// config. Eval runs leave best_epoch empty.
std::string metrics_csv(std::span<const AblationResult> results, bool with_best_epoch = true);
std::string history_csv(const TrainHistory& history, std::span<const std::string> experts);
/// Fixed-width comparison table of mean/sd accuracy and F1 per config.
std::string ablation_table(std::span<const AblationResult> results);

/// Writes a synthetic cohort and returns the subject count.
std::size_t generate_dataset_file(const RunConfig& cfg, const std::filesystem::path& out);

struct TrainSummary {
  ExperimentResult result;
  std::uint32_t train_hash = 0, test_hash = 0;
};

/// Trains on the seed's split and writes best.nmck, run.cfg, metrics.csv,
/// history.csv, summary.txt and utilization.{csv,svg} into `out_dir`.
TrainSummary train_to_directory(const RunConfig& cfg, std::span<const SubjectRecord> cohort,
                                const std::filesystem::path& out_dir,
                                const EpochCallback& on_epoch = {});

/// Scores a checkpoint on the test split recomputed from the config seed.
/// Writes metrics.csv and summary.txt when `out_dir` is non-empty.
Evaluation evaluate_to_directory(const RunConfig& cfg, std::span<const SubjectRecord> cohort,
                                 const std::filesystem::path& checkpoint,
                                 const std::filesystem::path& out_dir);

/// Runs the ablation matrix and writes metrics.csv and summary.txt.
std::vector<AblationResult> ablate_to_directory(const RunConfig& cfg,
                                                std::span<const SubjectRecord> cohort,
                                                std::span<const std::uint64_t> seeds,
                                                const std::vector<std::string>& names,
                                                const std::filesystem::path& out_dir,
                                                const AblationProgress& progress = {});

/// Expert-utilization report for a checkpoint on the test split; writes
/// utilization.{csv,svg} and summary.txt.
UtilizationReport report_to_directory(const RunConfig& cfg, std::span<const SubjectRecord> cohort,
                                      const std::filesystem::path& checkpoint,
                                      const std::filesystem::path& out_dir);

}  // namespace neuromoe

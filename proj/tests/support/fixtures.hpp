// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "neuromoe/evaluation.hpp"
#include "neuromoe/model.hpp"
#include "neuromoe/run_config.hpp"

namespace neuromoe::testing {

/// Desk-test sized configuration: 8^3 volumes, one narrow transformer layer.
inline RunConfig small_run_config() {
  RunConfig c;
  c.set("volume_shape", "8x8x8");
  c.set("counts", "8,8,8");
  c.set("d_model", "8");
  c.set("num_heads", "2");
  c.set("num_layers", "1");
  c.set("ffn_hidden", "16");
  c.set("epochs", "3");
  c.set("cohort_seed", "5");
  return c;
}

template <typename T>
struct SmallProblem {
  RunConfig cfg;
  std::vector<SubjectRecord> cohort;
  PreparedSplit split;
  std::vector<Sample<T>> train, test;
};

template <typename T>
SmallProblem<T> small_problem(RunConfig cfg, std::uint64_t split_seed = 1) {
  SmallProblem<T> p;
  p.cohort = generate_cohort(cfg.cohort);
  p.split = prepare_split(p.cohort, cfg.train_fraction, split_seed);
  cfg.model.feature_dim = p.split.stats.feature_dim();
  p.cfg = cfg;
  p.train = prepare_samples<T>(p.split.train, cfg.model);
  p.test = prepare_samples<T>(p.split.test, cfg.model);
  return p;
}

template <typename T>
std::vector<const Sample<T>*> pointers(const std::vector<Sample<T>>& samples, std::size_t begin,
                                       std::size_t count) {
  std::vector<const Sample<T>*> out;
  for (std::size_t i = begin; i < begin + count; ++i) out.push_back(&samples[i]);
  return out;
}

}  // namespace neuromoe::testing

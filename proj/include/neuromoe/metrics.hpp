// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "neuromoe/data.hpp"

namespace neuromoe {

using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  /// A zero denominator was replaced by 0.
  bool undefined = false;
};

struct Metrics {
  std::size_t n = 0;
  double accuracy = 0.0;
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  std::array<ClassScores, kNumClasses> per_class{};
  Confusion confusion{};  // rows = true class, columns = predicted
  bool any_undefined = false;
};

Metrics metrics_from_confusion(const Confusion& confusion);
Metrics compute_metrics(std::span<const int> labels, std::span<const int> predicted);

}  // namespace neuromoe

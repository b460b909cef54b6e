// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/metrics.hpp"

#include "neuromoe/error.hpp"

namespace neuromoe {

Metrics metrics_from_confusion(const Confusion& confusion) {
  Metrics m;
  m.confusion = confusion;
  std::size_t trace = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    trace += confusion[i][i];
    for (std::size_t j = 0; j < kNumClasses; ++j) m.n += confusion[i][j];
  }
  if (m.n == 0) throw ValidationError("cannot compute metrics on an empty set");
  m.accuracy = static_cast<double>(trace) / static_cast<double>(m.n);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      predicted += confusion[k][c];
      actual += confusion[c][k];
    }
    auto& s = m.per_class[c];
    const double tp = static_cast<double>(confusion[c][c]);
    s.support = actual;
    if (predicted > 0) s.precision = tp / static_cast<double>(predicted); else s.undefined = true;
    if (actual > 0) s.recall = tp / static_cast<double>(actual); else s.undefined = true;
    if (s.precision + s.recall > 0.0)
      s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    else
      s.undefined = s.undefined || tp == 0.0;
    m.any_undefined = m.any_undefined || s.undefined;
    m.f1_macro += s.f1 / static_cast<double>(kNumClasses);
    m.f1_weighted += s.f1 * static_cast<double>(actual) / static_cast<double>(m.n);
  }
  return m;
}

Metrics compute_metrics(std::span<const int> labels, std::span<const int> predicted) {
  if (labels.size() != predicted.size())
    throw DimensionError("compute_metrics: " + std::to_string(labels.size()) + " labels vs " +
                         std::to_string(predicted.size()) + " predictions");
  Confusion c{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(kNumClasses) || predicted[i] < 0 ||
        predicted[i] >= static_cast<int>(kNumClasses))
      throw ValidationError("class index out of range in metrics input");
    ++c[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predicted[i])];
  }
  return metrics_from_confusion(c);
}

}  // namespace neuromoe

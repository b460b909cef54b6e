// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "neuromoe/config.hpp"
#include "neuromoe/data.hpp"

namespace neuromoe {

/// Everything a CLI run needs. Populated from defaults, then a key=value
/// file, then individual flags.
struct RunConfig {
  CohortSpec cohort;
  ModelConfig model;
  TrainConfig train;
  double train_fraction = 0.8;

  /// Applies one `key=value` setting. Unknown keys and malformed values throw
  /// ValidationError.
  void set(std::string_view key, std::string_view value);
  /// Reads `key = value` lines; '#' starts a comment.
  void load_text(std::string_view text, std::string_view source = "<config>");
  void load_file(const std::filesystem::path& path);
  /// Every settable key with its current value, one `key=value` per line.
  /// Feeding the text back through load_text reproduces this config.
  std::string to_text() const;
  void validate() const;
};

}  // namespace neuromoe

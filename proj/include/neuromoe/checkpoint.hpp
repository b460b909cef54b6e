// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neuromoe/config.hpp"
#include "neuromoe/model.hpp"

namespace neuromoe {

/// Parameter snapshot in 64-bit precision plus the architecture fingerprint.
struct Checkpoint {
  std::array<std::uint8_t, 32> fingerprint{};
  std::vector<std::pair<std::string, Tensor<double>>> params;  // sorted by name
};

std::array<std::uint8_t, 32> config_fingerprint(const ModelConfig& cfg);

template <typename T>
Checkpoint snapshot(const NeuroMoE<T>& model);
/// Copies checkpoint values into `model`. A fingerprint, name or shape
/// difference throws ConfigMismatchError.
template <typename T>
void restore(NeuroMoE<T>& model, const Checkpoint& ckpt);

// Checkpoint file ("NMCK", little-endian).
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace neuromoe

// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace neuromoe {

using Dims3 = std::array<std::size_t, 3>;

enum class Modality : std::uint8_t { AMRI = 0, DTI = 1, FMRI = 2 };
inline constexpr std::array<Modality, 3> kModalities{Modality::AMRI, Modality::DTI,
                                                     Modality::FMRI};
const char* to_string(Modality m) noexcept;

/// Expert slots in canonical fusion order.
enum class ExpertId : std::uint8_t {
  Functional = 0,
  Anatomical = 1,
  Diffusion = 2,
  Clinical = 3
};
inline constexpr std::size_t kNumExperts = 4;
inline constexpr std::array<ExpertId, 4> kExperts{ExpertId::Functional, ExpertId::Anatomical,
                                                  ExpertId::Diffusion, ExpertId::Clinical};
const char* to_string(ExpertId e) noexcept;
/// The imaging modality feeding an MRI expert. Must not be called on Clinical.
Modality modality_of(ExpertId e);

enum class TemporalCollapse : std::uint8_t { Mean, FirstFrame };
enum class GateMode : std::uint8_t { Gated, Uniform };
enum class Precision : std::uint8_t { F32, F64 };

struct EncoderConfig {
  std::size_t patch_size = 4;
  /// Spatial dims per modality, indexed by Modality.
  std::array<Dims3, 3> volume_shapes{Dims3{32, 32, 32}, Dims3{32, 32, 32},
                                     Dims3{32, 32, 32}};
  std::size_t d_model = 64;
  std::size_t num_heads = 4;
  std::size_t num_layers = 2;
  std::size_t ffn_hidden = 128;
  std::vector<std::size_t> clinical_hidden{32, 16};
  std::size_t clinical_out = 16;
  double clinical_dropout = 0.30;
  TemporalCollapse temporal_collapse = TemporalCollapse::Mean;

  const Dims3& volume_shape(Modality m) const {
    return volume_shapes[static_cast<std::size_t>(m)];
  }
  std::size_t num_patches(Modality m) const;
  std::size_t patch_volume() const { return patch_size * patch_size * patch_size; }
  void validate() const;
};

struct ModelConfig {
  EncoderConfig encoder;
  /// Normalized clinical + serum vector length (6 continuous clinical,
  /// 2 one-hot PSG, 3 serum).
  std::size_t feature_dim = 11;
  std::size_t num_classes = 3;
  std::size_t expert_hidden = 32;
  std::vector<std::size_t> gate_hidden{32, 16};
  double gate_dropout = 0.30;
  GateMode mode = GateMode::Gated;
  /// Indexed by ExpertId.
  std::array<bool, 4> active{true, true, true, true};

  std::vector<ExpertId> active_experts() const;
  bool is_active(ExpertId e) const { return active[static_cast<std::size_t>(e)]; }
  void validate() const;
  /// Sorted key=value lines describing the architecture; hashed into the
  /// checkpoint fingerprint.
  std::string canonical_text() const;
  /// Lowercase hex SHA-256 of canonical_text().
  std::string fingerprint_hex() const;
};

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t accumulation_steps = 4;
  std::size_t epochs = 100;
  double lr_init = 0.001;
  double lr_min = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lambda_balance = 0.01;
  std::uint64_t seed = 0;
  Precision precision = Precision::F32;

  void validate() const;
};

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace neuromoe

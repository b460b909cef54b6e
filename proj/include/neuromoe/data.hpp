// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "neuromoe/config.hpp"
#include "neuromoe/tensor.hpp"

namespace neuromoe {

enum class Label : std::uint8_t { PD = 0, iRBD = 1, HC = 2 };
inline constexpr std::size_t kNumClasses = 3;
const char* to_string(Label l) noexcept;

enum class ClinicalFeature : std::uint8_t {
  DiseaseDuration = 0,
  PSG = 1,
  UPDRS3 = 2,
  TUG = 3,
  HoehnYahr = 4,
  MoCA = 5,
  UPSIT = 6,
};
enum class SerumFeature : std::uint8_t { VitaminD = 0, UricAcid = 1, IFNGamma = 2 };
inline constexpr std::size_t kNumClinical = 7;
inline constexpr std::size_t kNumSerum = 3;
const char* clinical_name(std::size_t index) noexcept;
const char* serum_name(std::size_t index) noexcept;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return v != v; }

/// One subject. Missing clinical or serum markers are NaN.
struct SubjectRecord {
  std::string subject_id;
  Label label = Label::HC;
  Tensor<double> amri;  // [X,Y,Z]
  Tensor<double> dti;   // [T_d,X,Y,Z]
  Tensor<double> fmri;  // [T_f,X,Y,Z]
  std::array<double, kNumClinical> clinical{};
  std::array<double, kNumSerum> serum{};

  const Tensor<double>& volume(Modality m) const;

  friend bool bitwise_equal(const SubjectRecord& a, const SubjectRecord& b);
};

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

struct ClassBiomarkers {
  /// Indexed by ClinicalFeature; the PSG entry is unused (see psg_positive).
  std::array<Moments, kNumClinical> clinical{};
  double psg_positive = 0.0;
  std::array<Moments, kNumSerum> serum{};
};

/// Class-dependent Gaussian bump planted in a modality. Center and radius are
/// fractions of the volume extent.
struct BlobSignal {
  std::array<double, 3> center{0.5, 0.5, 0.5};
  double radius = 0.15;
  double amplitude = 1.0;
};

struct CohortSpec {
  std::array<std::size_t, kNumClasses> counts{41, 44, 28};
  std::array<ClassBiomarkers, kNumClasses> biomarkers = default_biomarkers();
  double missing_rate = 0.05;
  std::array<Dims3, 3> volume_shapes{Dims3{32, 32, 32}, Dims3{32, 32, 32},
                                     Dims3{32, 32, 32}};
  std::size_t dti_frames = 2;
  std::size_t fmri_frames = 4;
  /// [class][modality]
  std::array<std::array<BlobSignal, 3>, kNumClasses> blobs = default_blobs();
  double signal_scale = 1.0;
  double noise_sd = 1.0;
  double background_amplitude = 0.5;
  std::size_t background_bumps = 3;
  double center_jitter = 0.03;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t total() const { return counts[0] + counts[1] + counts[2]; }

  static std::array<ClassBiomarkers, kNumClasses> default_biomarkers();
  static std::array<std::array<BlobSignal, 3>, kNumClasses> default_blobs();
};

/// Deterministic synthetic cohort; records are grouped by class (PD, iRBD, HC).
std::vector<SubjectRecord> generate_cohort(const CohortSpec& spec);
/// Generates a single subject; generate_cohort is this applied per index.
SubjectRecord generate_subject(const CohortSpec& spec, Label label,
                               std::size_t class_index, std::size_t global_index);

struct FeatureStats {
  double mean = 0.0;
  double sd = 1.0;
  bool sd_guarded = false;
  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

struct PreprocessStats {
  std::array<FeatureStats, kNumClinical> clinical{};  // PSG entry unused
  std::array<FeatureStats, kNumSerum> serum{};
  std::vector<int> psg_categories;
  int psg_impute = 0;
  std::vector<std::string> warnings;

  bool fitted() const { return !psg_categories.empty(); }
  std::size_t feature_dim() const { return 6 + psg_categories.size() + kNumSerum; }
  friend bool operator==(const PreprocessStats&, const PreprocessStats&) = default;
};

inline constexpr double kSdGuard = 1e-8;

struct NormalizedRecord {
  std::string subject_id;
  Label label = Label::HC;
  Tensor<double> amri, dti, fmri;
  /// [6 continuous clinical z-scores, PSG one-hot, 3 serum z-scores]
  std::vector<double> features;

  const Tensor<double>& volume(Modality m) const;
};

PreprocessStats fit_preprocess(std::span<const SubjectRecord> train);
NormalizedRecord apply_preprocess(const SubjectRecord& record, const PreprocessStats& stats);
std::vector<NormalizedRecord> apply_preprocess(std::span<const SubjectRecord> records,
                                               const PreprocessStats& stats);
/// Per-volume z-score over every voxel and frame (SD guard as for features).
Tensor<double> zscore_volume(const Tensor<double>& volume);

struct CohortSplit {
  std::vector<std::size_t> train;  // ascending indices into the cohort
  std::vector<std::size_t> test;
};

/// Stratified split: each class is shuffled and round(train_fraction * n)
/// members (clamped to [1, n-1]) go to train.
CohortSplit split_cohort(std::span<const SubjectRecord> records, double train_fraction,
                         std::uint64_t seed);
template <typename R>
std::vector<R> select(std::span<const R> records, std::span<const std::size_t> indices) {
  std::vector<R> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(records[i]);
  return out;
}
/// CRC32 over the ordered subject ids of `indices`, used to audit that
/// ablation configurations share splits.
std::uint32_t split_hash(std::span<const SubjectRecord> records,
                         std::span<const std::size_t> indices);

// Dataset container ("NMOE", little-endian).
std::vector<std::uint8_t> encode_dataset(std::span<const SubjectRecord> records);
std::vector<SubjectRecord> decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(std::span<const SubjectRecord> records, const std::filesystem::path& path);
std::vector<SubjectRecord> load_dataset(const std::filesystem::path& path);

}  // namespace neuromoe

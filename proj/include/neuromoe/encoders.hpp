// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "neuromoe/autodiff.hpp"
#include "neuromoe/config.hpp"
#include "neuromoe/layers.hpp"

namespace neuromoe {

// Volume preprocessing. These act on data tensors and are not recorded on a
// tape.

/// [T,X,Y,Z] -> [X,Y,Z]. A rank-3 input is returned unchanged.
template <typename T>
Tensor<T> temporal_collapse(const Tensor<T>& volume, TemporalCollapse mode);

/// [X,Y,Z] -> [N, p^3]. Patches are ordered x-major, then y, then z, and each
/// row holds its patch flattened in the same axis order.
template <typename T>
Tensor<T> patchify(const Tensor<T>& volume, std::size_t patch_size);
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, const Dims3& shape, std::size_t patch_size);

template <typename T>
struct AttentionParams {
  Linear<T> query, key, value, output;
};

template <typename T>
struct AttentionResult {
  Var<T> output;                     // [N, d_model]
  std::vector<Tensor<T>> attention;  // per head [N, N], if requested
};

/// Multi-head scaled dot-product self-attention over the rows of x.
template <typename T>
AttentionResult<T> mhsa_layer(Tape<T>& tape, Var<T> x, const AttentionParams<T>& params,
                              std::size_t num_heads, bool keep_attention = false);

/// Patch embedding + learned positions + K post-norm transformer blocks +
/// mean pooling, with parameters under "encoder.<modality>".
template <typename T>
class MriEncoder {
 public:
  MriEncoder(ParameterStore<T>& store, Modality modality, const EncoderConfig& cfg, Rng& rng);

  Modality modality() const noexcept { return modality_; }
  const std::string& prefix() const noexcept { return prefix_; }
  Parameter<T>& positional() const { return *positional_; }

  /// Full pipeline from a raw 3D (or 4D) normalized volume to [d_model].
  Var<T> encode_volume(Tape<T>& tape, const Tensor<T>& volume) const;
  /// From a patch matrix [N, p^3] (see prepare_patches) to [d_model].
  Var<T> encode_patches(Tape<T>& tape, const Tensor<T>& patches) const;
  /// Token states before pooling, with an explicit positional table [N, d].
  Var<T> encode_tokens(Tape<T>& tape, Var<T> patches, Var<T> positional) const;

  /// Temporal collapse + shape check + patchify.
  Tensor<T> prepare_patches(const Tensor<T>& volume) const;

 private:
  struct Block {
    AttentionParams<T> attention;
    Parameter<T>* norm1_gamma;
    Parameter<T>* norm1_beta;
    Linear<T> ffn_in, ffn_out;
    Parameter<T>* norm2_gamma;
    Parameter<T>* norm2_beta;
  };

  Modality modality_;
  EncoderConfig cfg_;
  std::string prefix_;
  Linear<T> patch_embed_;
  Parameter<T>* positional_;
  std::vector<Block> blocks_;
};

/// Shared serum/clinical FCN: hidden layers with ReLU + dropout, then a final
/// linear layer. Maps [B, feature_dim] -> [B, clinical_out].
template <typename T>
class ClinicalEncoder {
 public:
  ClinicalEncoder(ParameterStore<T>& store, std::size_t feature_dim, const EncoderConfig& cfg,
                  Rng& rng);

  Var<T> encode(Tape<T>& tape, Var<T> features, bool training, Rng* dropout_rng) const;
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t output_dim() const noexcept { return layers_.back().out_features(); }

 private:
  std::size_t feature_dim_;
  double dropout_;
  std::vector<Linear<T>> layers_;
};

extern template class MriEncoder<float>;
extern template class MriEncoder<double>;
extern template class ClinicalEncoder<float>;
extern template class ClinicalEncoder<double>;

}  // namespace neuromoe

// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/encoders.hpp"

#include <cmath>

#include "neuromoe/error.hpp"

namespace neuromoe {

template <typename T>
Tensor<T> temporal_collapse(const Tensor<T>& volume, TemporalCollapse mode) {
  if (volume.rank() == 3) return volume;
  if (volume.rank() != 4)
    throw ValidationError("temporal_collapse expects a [T,X,Y,Z] or [X,Y,Z] volume, got " +
                          shape_str(volume.shape()));
  const std::size_t frames = volume.dim(0);
  const std::size_t voxels = volume.size() / frames;
  Tensor<T> out({volume.dim(1), volume.dim(2), volume.dim(3)});
  if (mode == TemporalCollapse::FirstFrame) {
    std::copy_n(volume.data(), voxels, out.data());
    return out;
  }
  for (std::size_t f = 0; f < frames; ++f) {
    const T* src = volume.data() + f * voxels;
    for (std::size_t i = 0; i < voxels; ++i) out[i] += src[i];
  }
  const T inv = T(1) / static_cast<T>(frames);
  for (auto& v : out.values()) v *= inv;
  return out;
}

template <typename T>
Tensor<T> patchify(const Tensor<T>& volume, std::size_t p) {
  if (volume.rank() != 3)
    throw ValidationError("patchify expects a rank-3 volume, got " + shape_str(volume.shape()));
  if (p == 0) throw ValidationError("patch size must be positive");
  static constexpr const char* kAxis[] = {"x", "y", "z"};
  for (std::size_t a = 0; a < 3; ++a)
    if (volume.dim(a) % p != 0)
      throw ValidationError(std::string("patchify: axis ") + kAxis[a] + " extent " +
                            std::to_string(volume.dim(a)) + " is not divisible by patch size " +
                            std::to_string(p));
  const std::size_t X = volume.dim(0), Y = volume.dim(1), Z = volume.dim(2);
  const std::size_t bx = X / p, by = Y / p, bz = Z / p;
  Tensor<T> out({bx * by * bz, p * p * p});
  std::size_t row = 0;
  for (std::size_t i = 0; i < bx; ++i)
    for (std::size_t j = 0; j < by; ++j)
      for (std::size_t k = 0; k < bz; ++k, ++row) {
        T* dst = out.data() + row * p * p * p;
        for (std::size_t u = 0; u < p; ++u)
          for (std::size_t v = 0; v < p; ++v) {
            const T* src = volume.data() + ((i * p + u) * Y + (j * p + v)) * Z + k * p;
            std::copy_n(src, p, dst + (u * p + v) * p);
          }
      }
  return out;
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, const Dims3& shape, std::size_t p) {
  const std::size_t X = shape[0], Y = shape[1], Z = shape[2];
  if (p == 0 || X % p || Y % p || Z % p)
    throw ValidationError("unpatchify: shape not divisible by patch size");
  const std::size_t bx = X / p, by = Y / p, bz = Z / p;
  if (patches.rank() != 2 || patches.dim(0) != bx * by * bz || patches.dim(1) != p * p * p)
    throw DimensionError("unpatchify: patch matrix " + shape_str(patches.shape()) +
                         " does not match volume " + shape_str(Shape{X, Y, Z}));
  Tensor<T> out({X, Y, Z});
  std::size_t row = 0;
  for (std::size_t i = 0; i < bx; ++i)
    for (std::size_t j = 0; j < by; ++j)
      for (std::size_t k = 0; k < bz; ++k, ++row) {
        const T* src = patches.data() + row * p * p * p;
        for (std::size_t u = 0; u < p; ++u)
          for (std::size_t v = 0; v < p; ++v)
            std::copy_n(src + (u * p + v) * p, p,
                        out.data() + ((i * p + u) * Y + (j * p + v)) * Z + k * p);
      }
  return out;
}

template <typename T>
AttentionResult<T> mhsa_layer(Tape<T>& tape, Var<T> x, const AttentionParams<T>& params,
                              std::size_t num_heads, bool keep_attention) {
  const std::size_t d = x.shape().back();
  if (num_heads == 0 || d % num_heads != 0)
    throw ValidationError("mhsa: d_model " + std::to_string(d) +
                          " not divisible by num_heads " + std::to_string(num_heads));
  const std::size_t dh = d / num_heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  auto q = params.query(tape, x);
  auto k = params.key(tape, x);
  auto v = params.value(tape, x);
  AttentionResult<T> result;
  auto merged =
      ops::attention(q, k, v, num_heads, scale, keep_attention ? &result.attention : nullptr);
  result.output = params.output(tape, merged);
  return result;
}

template <typename T>
MriEncoder<T>::MriEncoder(ParameterStore<T>& store, Modality modality,
                          const EncoderConfig& cfg, Rng& rng)
    : modality_(modality), cfg_(cfg), prefix_(std::string("encoder.") + to_string(modality)) {
  cfg_.validate();
  const std::size_t d = cfg_.d_model;
  patch_embed_ = Linear<T>(store, prefix_ + ".patch_embed", cfg_.patch_volume(), d, rng);
  positional_ = &store.create(prefix_ + ".positional",
                              normal_init<T>({cfg_.num_patches(modality), d}, 0.02, rng));
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const std::string lp = prefix_ + ".layer" + std::to_string(l);
    Block b;
    b.attention.query = Linear<T>(store, lp + ".attn.query", d, d, rng);
    b.attention.key = Linear<T>(store, lp + ".attn.key", d, d, rng);
    b.attention.value = Linear<T>(store, lp + ".attn.value", d, d, rng);
    b.attention.output = Linear<T>(store, lp + ".attn.output", d, d, rng);
    b.norm1_gamma = &store.create(lp + ".norm1.gamma", Tensor<T>({d}, T(1)));
    b.norm1_beta = &store.create(lp + ".norm1.beta", Tensor<T>({d}));
    b.ffn_in = Linear<T>(store, lp + ".ffn.fc0", d, cfg_.ffn_hidden, rng);
    b.ffn_out = Linear<T>(store, lp + ".ffn.fc1", cfg_.ffn_hidden, d, rng);
    b.norm2_gamma = &store.create(lp + ".norm2.gamma", Tensor<T>({d}, T(1)));
    b.norm2_beta = &store.create(lp + ".norm2.beta", Tensor<T>({d}));
    blocks_.push_back(b);
  }
}

template <typename T>
Tensor<T> MriEncoder<T>::prepare_patches(const Tensor<T>& volume) const {
  Tensor<T> vol3 = temporal_collapse(volume, cfg_.temporal_collapse);
  const auto& want = cfg_.volume_shape(modality_);
  if (vol3.shape() != Shape{want[0], want[1], want[2]})
    throw ValidationError(std::string("encoder.") + to_string(modality_) + ": volume shape " +
                          shape_str(vol3.shape()) + " does not match configured " +
                          shape_str(Shape{want[0], want[1], want[2]}));
  return patchify(vol3, cfg_.patch_size);
}

template <typename T>
Var<T> MriEncoder<T>::encode_tokens(Tape<T>& tape, Var<T> patches, Var<T> positional) const {
  auto h = ops::add(patch_embed_(tape, patches), positional);
  for (const auto& b : blocks_) {
    auto attn = mhsa_layer(tape, h, b.attention, cfg_.num_heads, false);
    h = ops::layer_norm(ops::add(h, attn.output), tape.param(*b.norm1_gamma),
                        tape.param(*b.norm1_beta));
    auto f = b.ffn_out(tape, ops::relu(b.ffn_in(tape, h)));
    h = ops::layer_norm(ops::add(h, f), tape.param(*b.norm2_gamma), tape.param(*b.norm2_beta));
  }
  return h;
}

template <typename T>
Var<T> MriEncoder<T>::encode_patches(Tape<T>& tape, const Tensor<T>& patches) const {
  const Shape want{cfg_.num_patches(modality_), cfg_.patch_volume()};
  if (patches.shape() != want)
    throw ValidationError(prefix_ + ": patch matrix " + shape_str(patches.shape()) +
                          " does not match configured " + shape_str(want));
  auto tokens = encode_tokens(tape, tape.constant(patches), tape.param(*positional_));
  return ops::mean_axis(tokens, 0);
}

template <typename T>
Var<T> MriEncoder<T>::encode_volume(Tape<T>& tape, const Tensor<T>& volume) const {
  return encode_patches(tape, prepare_patches(volume));
}

template <typename T>
ClinicalEncoder<T>::ClinicalEncoder(ParameterStore<T>& store, std::size_t feature_dim,
                                    const EncoderConfig& cfg, Rng& rng)
    : feature_dim_(feature_dim), dropout_(cfg.clinical_dropout) {
  std::size_t in = feature_dim;
  std::size_t idx = 0;
  for (auto h : cfg.clinical_hidden) {
    layers_.emplace_back(store, "encoder.clinical.fc" + std::to_string(idx++), in, h, rng);
    in = h;
  }
  layers_.emplace_back(store, "encoder.clinical.fc" + std::to_string(idx), in,
                       cfg.clinical_out, rng);
}

template <typename T>
Var<T> ClinicalEncoder<T>::encode(Tape<T>& tape, Var<T> features, bool training,
                                  Rng* dropout_rng) const {
  const auto& s = features.shape();
  if (s.size() != 2 || s[1] != feature_dim_)
    throw ValidationError("clinical encoder expects [B, " + std::to_string(feature_dim_) +
                          "] features, got " + shape_str(s));
  if (training && dropout_ > 0.0 && !dropout_rng)
    throw ContractError("clinical encoder: training mode needs a dropout generator");
  auto h = features;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    h = ops::relu(layers_[i](tape, h));
    if (training) h = ops::dropout(h, dropout_, true, *dropout_rng);
  }
  return layers_.back()(tape, h);
}

template Tensor<float> temporal_collapse<float>(const Tensor<float>&, TemporalCollapse);
template Tensor<double> temporal_collapse<double>(const Tensor<double>&, TemporalCollapse);
template Tensor<float> patchify<float>(const Tensor<float>&, std::size_t);
template Tensor<double> patchify<double>(const Tensor<double>&, std::size_t);
template Tensor<float> unpatchify<float>(const Tensor<float>&, const Dims3&, std::size_t);
template Tensor<double> unpatchify<double>(const Tensor<double>&, const Dims3&, std::size_t);
template AttentionResult<float> mhsa_layer<float>(Tape<float>&, Var<float>,
                                                  const AttentionParams<float>&, std::size_t,
                                                  bool);
template AttentionResult<double> mhsa_layer<double>(Tape<double>&, Var<double>,
                                                    const AttentionParams<double>&, std::size_t,
                                                    bool);
template class MriEncoder<float>;
template class MriEncoder<double>;
template class ClinicalEncoder<float>;
template class ClinicalEncoder<double>;

}  // namespace neuromoe

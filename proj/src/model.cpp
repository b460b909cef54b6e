// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/model.hpp"

#include <algorithm>

#include "neuromoe/error.hpp"

namespace neuromoe {

template <typename T>
std::vector<Sample<T>> prepare_samples(std::span<const NormalizedRecord> records,
                                       const ModelConfig& cfg) {
  cfg.validate();
  const auto& enc = cfg.encoder;
  std::vector<Sample<T>> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.features.size() != cfg.feature_dim)
      throw ValidationError("subject " + r.subject_id + ": feature vector has " +
                            std::to_string(r.features.size()) + " entries, model expects " +
                            std::to_string(cfg.feature_dim));
    Sample<T> s;
    s.subject_id = r.subject_id;
    s.label = static_cast<int>(r.label);
    for (auto e : cfg.active_experts()) {
      if (e == ExpertId::Clinical) continue;
      const Modality m = modality_of(e);
      Tensor<double> vol = temporal_collapse(r.volume(m), enc.temporal_collapse);
      const auto& want = enc.volume_shape(m);
      if (vol.shape() != Shape{want[0], want[1], want[2]})
        throw ValidationError("subject " + r.subject_id + ": " + to_string(m) + " volume " +
                              shape_str(vol.shape()) + " does not match configured " +
                              shape_str(Shape{want[0], want[1], want[2]}));
      s.patches[static_cast<std::size_t>(m)] = patchify(vol, enc.patch_size).cast<T>();
    }
    s.features.assign(r.features.begin(), r.features.end());
    out.push_back(std::move(s));
  }
  return out;
}

template <typename T>
NeuroMoE<T>::NeuroMoE(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), active_(cfg.active_experts()) {
  cfg_.validate();
  const Rng root = Rng(seed).derive("init");
  std::vector<std::size_t> dims;
  for (auto e : active_) {
    if (e == ExpertId::Clinical) {
      Rng r = root.derive("encoder.clinical");
      clinical_ = std::make_unique<ClinicalEncoder<T>>(store_, cfg_.feature_dim, cfg_.encoder, r);
      dims.push_back(clinical_->output_dim());
    } else {
      const Modality m = modality_of(e);
      Rng r = root.derive(std::string("encoder.") + to_string(m));
      mri_[static_cast<std::size_t>(m)] =
          std::make_unique<MriEncoder<T>>(store_, m, cfg_.encoder, r);
      dims.push_back(cfg_.encoder.d_model);
    }
  }
  Rng moe_rng = root.derive("moe");
  moe_ = std::make_unique<MoeBlock<T>>(store_, cfg_, dims, moe_rng);
}

template <typename T>
ForwardResult<T> NeuroMoE<T>::forward(Tape<T>& tape, std::span<const Sample<T>* const> batch,
                                      bool training, Rng* dropout_rng) const {
  if (batch.empty()) throw ValidationError("forward: empty batch");
  if (training && !dropout_rng) throw ContractError("forward: training needs a dropout generator");
  const std::size_t B = batch.size();
  const std::size_t F = cfg_.feature_dim;
  Tensor<T> feat({B, F});
  for (std::size_t b = 0; b < B; ++b) {
    if (batch[b]->features.size() != F)
      throw ValidationError("subject " + batch[b]->subject_id + ": expected " +
                            std::to_string(F) + " features");
    std::copy(batch[b]->features.begin(), batch[b]->features.end(), feat.data() + b * F);
  }
  auto features = tape.constant(std::move(feat));

  std::vector<Var<T>> embeddings;
  for (auto e : active_) {
    if (e == ExpertId::Clinical) {
      embeddings.push_back(clinical_->encode(tape, features, training, dropout_rng));
      continue;
    }
    const auto& enc = *mri_[static_cast<std::size_t>(modality_of(e))];
    std::vector<Var<T>> rows;
    rows.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
      auto pooled = enc.encode_patches(tape, batch[b]->patches[static_cast<std::size_t>(enc.modality())]);
      rows.push_back(ops::reshape(pooled, Shape{1, cfg_.encoder.d_model}));
    }
    embeddings.push_back(B == 1 ? rows[0] : ops::concat<T>(rows, 0));
  }

  auto moe = moe_->forward(tape, embeddings, features, training, dropout_rng);
  return {moe.fused, moe.gate, std::move(moe.expert_logits)};
}

template <typename T>
LossTerms<T> NeuroMoE<T>::loss(const ForwardResult<T>& fwd, std::span<const int> labels,
                               double lambda) const {
  LossTerms<T> t;
  t.cross_entropy = ops::cross_entropy(fwd.logits, labels);
  t.balance = balance_regularizer(fwd.gate);
  t.total = lambda == 0.0
                ? t.cross_entropy
                : ops::add(t.cross_entropy, ops::scale(t.balance, static_cast<T>(lambda)));
  return t;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

template <typename T>
Predictions NeuroMoE<T>::predict(std::span<const Sample<T>> samples) const {
  Predictions p;
  for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, samples.size() - start);
    std::vector<const Sample<T>*> batch;
    for (std::size_t i = 0; i < n; ++i) batch.push_back(&samples[start + i]);
    Tape<T> tape(false);
    auto fwd = forward(tape, batch, false, nullptr);
    const auto& logits = fwd.logits.value();
    const auto& gate = fwd.gate.value();
    const std::size_t C = logits.dim(1), E = gate.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> l(C), g(E);
      for (std::size_t c = 0; c < C; ++c) l[c] = static_cast<double>(logits.at(i, c));
      double total = 0.0;
      for (std::size_t e = 0; e < E; ++e) total += g[e] = static_cast<double>(gate.at(i, e));
      for (auto& w : g) w /= total;
      p.labels.push_back(batch[i]->label);
      p.predicted.push_back(argmax(l));
      p.logits.push_back(std::move(l));
      p.gate.push_back(std::move(g));
    }
  }
  return p;
}

template std::vector<Sample<float>> prepare_samples<float>(std::span<const NormalizedRecord>,
                                                           const ModelConfig&);
template std::vector<Sample<double>> prepare_samples<double>(std::span<const NormalizedRecord>,
                                                             const ModelConfig&);
template class NeuroMoE<float>;
template class NeuroMoE<double>;

}  // namespace neuromoe

// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "neuromoe/autodiff.hpp"
#include "neuromoe/rng.hpp"

namespace neuromoe {

/// Xavier/Glorot uniform init for a [fan_in, fan_out] weight.
template <typename T>
Tensor<T> xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
template <typename T>
Tensor<T> normal_init(Shape shape, double sd, Rng& rng);

/// y = x W + b with W [in, out], b [out]. Parameters live in a store and are
/// named "<prefix>.weight" / "<prefix>.bias".
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& prefix, std::size_t in,
         std::size_t out, Rng& rng);

  Var<T> operator()(Tape<T>& tape, Var<T> x) const;

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  Parameter<T>& weight() const { return *weight_; }
  Parameter<T>& bias() const { return *bias_; }

 private:
  Parameter<T>* weight_ = nullptr;
  Parameter<T>* bias_ = nullptr;
  std::size_t in_ = 0, out_ = 0;
};

extern template class Linear<float>;
extern template class Linear<double>;

}  // namespace neuromoe

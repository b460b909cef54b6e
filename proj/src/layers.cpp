// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/layers.hpp"

#include <cmath>

#include "neuromoe/error.hpp"

namespace neuromoe {

template <typename T>
Tensor<T> xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> w({fan_in, fan_out});
  for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-a, a));
  return w;
}

template <typename T>
Tensor<T> normal_init(Shape shape, double sd, Rng& rng) {
  Tensor<T> w(std::move(shape));
  for (auto& v : w.values()) v = static_cast<T>(rng.normal(0.0, sd));
  return w;
}

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& prefix, std::size_t in,
                  std::size_t out, Rng& rng)
    : in_(in), out_(out) {
  weight_ = &store.create(prefix + ".weight", xavier_uniform<T>(in, out, rng));
  bias_ = &store.create(prefix + ".bias", Tensor<T>({out}));
}

template <typename T>
Var<T> Linear<T>::operator()(Tape<T>& tape, Var<T> x) const {
  if (x.shape().back() != in_)
    throw DimensionError("linear layer '" + weight_->name + "' expects " +
                         std::to_string(in_) + " input features, got shape " +
                         shape_str(x.shape()));
  return ops::add_bias(ops::matmul(x, tape.param(*weight_)), tape.param(*bias_));
}

template Tensor<float> xavier_uniform<float>(std::size_t, std::size_t, Rng&);
template Tensor<double> xavier_uniform<double>(std::size_t, std::size_t, Rng&);
template Tensor<float> normal_init<float>(Shape, double, Rng&);
template Tensor<double> normal_init<double>(Shape, double, Rng&);
template class Linear<float>;
template class Linear<double>;

}  // namespace neuromoe

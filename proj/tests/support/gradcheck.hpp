// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "neuromoe/autodiff.hpp"
#include "neuromoe/rng.hpp"

namespace neuromoe::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;

  void record(double analytic, double numeric, const std::string& where) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    const double rel = std::abs(analytic - numeric) / denom;
    ++checked;
    if (rel > max_rel_error) {
      max_rel_error = rel;
      char buf[160];
      std::snprintf(buf, sizeof buf, " analytic %.10g numeric %.10g", analytic, numeric);
      worst = where + buf;
    }
  }
  void merge(const GradCheck& o) {
    checked += o.checked;
    if (o.max_rel_error > max_rel_error) {
      max_rel_error = o.max_rel_error;
      worst = o.worst;
    }
  }
};

/// Up to `count` distinct indices in [0, n), drawn without replacement.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n <= count) return idx;
  rng.shuffle(idx);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Contracts any output to a scalar with fixed random weights, so every
/// output element contributes to the checked gradient.
inline Var<double> project(Var<double> out, std::uint64_t seed) {
  Rng rng(seed);
  auto w = random_tensor(out.shape(), rng, 0.5, 1.5);
  return ops::sum(ops::mul(out, out.tape->constant(std::move(w))));
}

using InputLoss = std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;

/// Central finite differences (step h) against the tape gradients of every
/// input tensor, at up to `per_input` coordinates each.
inline GradCheck check_input_gradients(const InputLoss& f, std::vector<Tensor<double>> inputs,
                                       std::uint64_t seed, std::size_t per_input = 20,
                                       double h = 1e-5) {
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> leaves;
    for (const auto& x : inputs) leaves.push_back(tape.leaf(x));
    auto loss = f(tape, leaves);
    tape.backward(loss);
    for (auto v : leaves) analytic.push_back(tape.grad(v));
  }
  auto eval = [&]() {
    Tape<double> tape(false);
    std::vector<Var<double>> leaves;
    for (const auto& x : inputs) leaves.push_back(tape.constant(x));
    return f(tape, leaves).value()[0];
  };
  GradCheck out;
  Rng rng(seed);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (auto j : sample_indices(inputs[i].size(), per_input, rng)) {
      const double x0 = inputs[i][j];
      inputs[i][j] = x0 + h;
      const double up = eval();
      inputs[i][j] = x0 - h;
      const double down = eval();
      inputs[i][j] = x0;
      out.record(analytic[i][j], (up - down) / (2 * h),
                 "input " + std::to_string(i) + "[" + std::to_string(j) + "]");
    }
  }
  return out;
}

/// Same check over the parameters of a store; `f` must build the loss from
/// tape.param() and be deterministic.
inline GradCheck check_parameter_gradients(ParameterStore<double>& store,
                                           const std::function<Var<double>(Tape<double>&)>& f,
                                           std::uint64_t seed, std::size_t per_param = 20,
                                           double h = 1e-5) {
  store.zero_grad();
  {
    Tape<double> tape;
    auto loss = f(tape);
    tape.backward(loss);
  }
  auto eval = [&]() {
    Tape<double> tape(false);
    return f(tape).value()[0];
  };
  GradCheck out;
  Rng rng(seed);
  for (auto* p : store.all()) {
    const Tensor<double> grad = p->grad;
    for (auto j : sample_indices(p->value.size(), per_param, rng)) {
      const double x0 = p->value[j];
      p->value[j] = x0 + h;
      const double up = eval();
      p->value[j] = x0 - h;
      const double down = eval();
      p->value[j] = x0;
      out.record(grad[j], (up - down) / (2 * h), p->name + "[" + std::to_string(j) + "]");
    }
  }
  store.zero_grad();
  return out;
}

}  // namespace neuromoe::testing

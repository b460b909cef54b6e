// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "neuromoe/rng.hpp"
#include "neuromoe/tensor.hpp"

namespace neuromoe {

/// Named trainable tensor. `grad` always has the shape of `value` and
/// accumulates across backward passes until zero_grad() is called.
template <typename T>
struct Parameter {
  Parameter(std::string name, Tensor<T> init)
      : name(std::move(name)), value(std::move(init)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }

  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

/// Owns every Parameter of a model. Iteration order is lexicographic by name,
/// which is also the checkpoint serialization order.
template <typename T>
class ParameterStore {
 public:
  Parameter<T>& create(const std::string& name, Tensor<T> init);
  Parameter<T>* find(const std::string& name);
  const Parameter<T>* find(const std::string& name) const;
  Parameter<T>& get(const std::string& name);

  std::vector<Parameter<T>*> all();
  std::vector<const Parameter<T>*> all() const;
  std::vector<Parameter<T>*> with_prefix(std::string_view prefix);

  void zero_grad();
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;

 private:
  std::map<std::string, std::unique_ptr<Parameter<T>>, std::less<>> params_;
};

enum class OpKind : std::uint8_t {
  Constant,
  Leaf,
  Param,
  MatMul,
  MatMulNT,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  AddBias,
  ScaleRows,
  Relu,
  Sum,
  Mean,
  MeanAxis,
  LayerNorm,
  Dropout,
  Reshape,
  Concat,
  Slice,
  Softmax,
  Attention,
  CrossEntropy,
};

const char* to_string(OpKind kind) noexcept;

template <typename T>
class Tape;

/// Lightweight handle to a node on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Append-only record of a forward computation. backward() walks it once in
/// reverse. A tape belongs to a single thread; create a fresh one per forward.
template <typename T>
class Tape {
 public:
  using BackwardFn =
      std::function<void(Tape&, const Tensor<T>& out, const Tensor<T>& out_grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var<T> constant(Tensor<T> value);
  Var<T> leaf(Tensor<T> value, bool requires_grad = true);
  /// Registers `p` on this tape. Repeated calls return the same node, so a
  /// parameter used several times still has exactly one leaf.
  Var<T> param(Parameter<T>& p);

  /// The reference stays valid for the lifetime of the tape.
  const Tensor<T>& value(Var<T> v) const;
  bool requires_grad(Var<T> v) const;
  OpKind kind(Var<T> v) const;
  /// Gradient of the last backward() loss w.r.t. `v` (zeros if unreached).
  Tensor<T> grad(Var<T> v) const;

  /// Populates gradients for every node that requires them and adds leaf
  /// gradients into the associated Parameter::grad.
  void backward(Var<T> loss);

  // Used by op implementations.
  Var<T> record(OpKind kind, Tensor<T> value,
                std::initializer_list<Var<T>> inputs, BackwardFn fn);
  Var<T> record(OpKind kind, Tensor<T> value, std::span<const Var<T>> inputs,
                BackwardFn fn);
  /// Gradient accumulator of node `v`, allocated on first use. Only valid
  /// while backward() is running.
  Tensor<T>* grad_sink(Var<T> v);

 private:
  struct Node {
    OpKind kind = OpKind::Constant;
    bool requires_grad = false;
    bool grad_live = false;
    Parameter<T>* param = nullptr;
    Tensor<T> value;
    Tensor<T> grad;
    BackwardFn backward;
  };

  void check_owned(Var<T> v) const;

  bool grad_enabled_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::uint32_t> param_ids_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape->value(*this);
}

/// Differentiable operations. Every function checks shapes and throws
/// DimensionError naming the offending shapes.
namespace ops {

/// [m,k] x [k,n] -> [m,n]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);
/// alpha * a * b^T for a [m,k], b [n,k] -> [m,n]
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b, T alpha = T(1));

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T c);
template <typename T>
Var<T> add_scalar(Var<T> a, T c);
/// x [..., n] + b [n], broadcast over leading dims.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> b);
/// x [m, n] with row i multiplied by s[i]; s holds m values.
template <typename T>
Var<T> scale_rows(Var<T> x, Var<T> s);
template <typename T>
Var<T> relu(Var<T> x);

template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);
/// Mean over one axis; the axis is removed from the shape.
template <typename T>
Var<T> mean_axis(Var<T> x, std::size_t axis);

/// Normalizes over the last axis, then applies gamma/beta of shape [n].
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5));

/// Inverted dropout. With training == false (or p == 0) the input node is
/// returned unchanged.
template <typename T>
Var<T> dropout(Var<T> x, double p, bool training, Rng& rng);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);
template <typename T>
Var<T> flatten(Var<T> x);
template <typename T>
Var<T> concat(std::span<const Var<T>> xs, std::size_t axis);
template <typename T>
Var<T> slice(Var<T> x, std::size_t axis, std::size_t start, std::size_t length);

template <typename T>
Var<T> softmax(Var<T> x, std::size_t axis);
/// Multi-head scaled dot-product attention. Head h reads columns
/// [h*dh, (h+1)*dh) of q, k, v [N, d] and writes the same columns of the
/// output: softmax(scale * q_h k_h^T) v_h. When `probabilities` is non-null it
/// receives the per-head [N, N] attention matrices.
template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, std::size_t num_heads, T scale,
                 std::vector<Tensor<T>>* probabilities = nullptr);

/// Mean negative log-likelihood of `labels` under softmax(logits), logits
/// [B, C].
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> labels);

}  // namespace ops

extern template struct Parameter<float>;
extern template struct Parameter<double>;
extern template class ParameterStore<float>;
extern template class ParameterStore<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace neuromoe

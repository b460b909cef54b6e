// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <type_traits>

#include "neuromoe/error.hpp"

namespace neuromoe {

const char* to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Leaf: return "leaf";
    case OpKind::Param: return "param";
    case OpKind::MatMul: return "matmul";
    case OpKind::MatMulNT: return "matmul_nt";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddScalar: return "add_scalar";
    case OpKind::AddBias: return "add_bias";
    case OpKind::ScaleRows: return "scale_rows";
    case OpKind::Relu: return "relu";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::MeanAxis: return "mean_axis";
    case OpKind::LayerNorm: return "layer_norm";
    case OpKind::Dropout: return "dropout";
    case OpKind::Reshape: return "reshape";
    case OpKind::Concat: return "concat";
    case OpKind::Slice: return "slice";
    case OpKind::Softmax: return "softmax";
    case OpKind::Attention: return "attention";
    case OpKind::CrossEntropy: return "cross_entropy";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ParameterStore

template <typename T>
Parameter<T>& ParameterStore<T>::create(const std::string& name,
                                        Tensor<T> init) {
  if (name.empty()) throw ValidationError("parameter name must not be empty");
  auto [it, inserted] =
      params_.try_emplace(name, std::make_unique<Parameter<T>>(name, std::move(init)));
  if (!inserted) throw ValidationError("duplicate parameter name '" + name + "'");
  return *it->second;
}

template <typename T>
Parameter<T>* ParameterStore<T>::find(const std::string& name) {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : it->second.get();
}

template <typename T>
const Parameter<T>* ParameterStore<T>::find(const std::string& name) const {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : it->second.get();
}

template <typename T>
Parameter<T>& ParameterStore<T>::get(const std::string& name) {
  auto* p = find(name);
  if (!p) throw ValidationError("unknown parameter '" + name + "'");
  return *p;
}

template <typename T>
std::vector<Parameter<T>*> ParameterStore<T>::all() {
  std::vector<Parameter<T>*> out;
  out.reserve(params_.size());
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> ParameterStore<T>::all() const {
  std::vector<const Parameter<T>*> out;
  out.reserve(params_.size());
  for (const auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::vector<Parameter<T>*> ParameterStore<T>::with_prefix(std::string_view prefix) {
  std::vector<Parameter<T>*> out;
  for (auto& [name, p] : params_)
    if (std::string_view(name).starts_with(prefix)) out.push_back(p.get());
  return out;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& [_, p] : params_) p->zero_grad();
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Tape

template <typename T>
void Tape<T>::check_owned(Var<T> v) const {
  if (v.tape != this || v.id >= nodes_.size())
    throw ContractError("variable does not belong to this tape");
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node n;
  n.kind = OpKind::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return {this, it->second};
  Node n;
  n.kind = OpKind::Param;
  n.param = &p;
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_ids_.emplace(&p, id);
  return {this, id};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var<T> v) const {
  check_owned(v);
  const Node& n = nodes_[v.id];
  return n.param ? n.param->value : n.value;
}

template <typename T>
bool Tape<T>::requires_grad(Var<T> v) const {
  check_owned(v);
  return nodes_[v.id].requires_grad;
}

template <typename T>
OpKind Tape<T>::kind(Var<T> v) const {
  check_owned(v);
  return nodes_[v.id].kind;
}

template <typename T>
Tensor<T> Tape<T>::grad(Var<T> v) const {
  check_owned(v);
  const Node& n = nodes_[v.id];
  if (n.grad_live) return n.grad;
  return Tensor<T>(value(v).shape());
}

template <typename T>
Var<T> Tape<T>::record(OpKind kind, Tensor<T> value,
                       std::initializer_list<Var<T>> inputs, BackwardFn fn) {
  return record(kind, std::move(value),
                std::span<const Var<T>>(inputs.begin(), inputs.size()),
                std::move(fn));
}

template <typename T>
Var<T> Tape<T>::record(OpKind kind, Tensor<T> value,
                       std::span<const Var<T>> inputs, BackwardFn fn) {
  bool needs = false;
  for (auto in : inputs) {
    check_owned(in);
    needs = needs || nodes_[in.id].requires_grad;
  }
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  n.requires_grad = needs && grad_enabled_;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Tensor<T>* Tape<T>::grad_sink(Var<T> v) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return nullptr;
  if (!n.grad_live) {
    n.grad = Tensor<T>(value(v).shape());
    n.grad_live = true;
  }
  return &n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  check_owned(loss);
  if (value(loss).size() != 1)
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_str(value(loss).shape()));
  if (!grad_enabled_) throw ContractError("backward() on a tape with gradients disabled");
  for (auto& n : nodes_) {
    n.grad_live = false;
    n.grad = Tensor<T>();
  }
  Node& root = nodes_[loss.id];
  if (!root.requires_grad) return;
  root.grad = Tensor<T>(value(loss).shape(), T(1));
  root.grad_live = true;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.grad_live || !n.backward) continue;
    n.backward(*this, n.param ? n.param->value : n.value, n.grad);
  }
  for (auto& n : nodes_) {
    if (!n.param || !n.grad_live) continue;
    auto& g = n.param->grad;
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
  }
}

// ---------------------------------------------------------------------------
// ops

namespace ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using CMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
CMatMap<T> as_mat(const Tensor<T>& t) {
  return CMatMap<T>(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                    static_cast<Eigen::Index>(t.dim(1)));
}
template <typename T>
MatMap<T> as_mat(Tensor<T>& t) {
  return MatMap<T>(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                   static_cast<Eigen::Index>(t.dim(1)));
}

void require_rank2(const Shape& s, const char* op) {
  if (s.size() != 2)
    throw DimensionError(std::string(op) + " expects a rank-2 tensor, got " +
                         shape_str(s));
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
}

struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size())
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(s));
  AxisSplit a;
  for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
  a.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
  return a;
}

// In-place stable softmax of every row of a row-major [rows, cols] block.
template <typename Block>
void softmax_rows(Block&& m) {
  using T = typename std::decay_t<Block>::Scalar;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r).array();
    row = (row - row.maxCoeff()).exp();
    row *= T(1) / row.sum();
  }
}

template <typename T>
void accumulate(Tensor<T>* sink, const Tensor<T>& g) {
  if (!sink) return;
  T* d = sink->data();
  const T* s = g.data();
  for (std::size_t i = 0, n = g.size(); i < n; ++i) d[i] += s[i];
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require_rank2(A.shape(), "matmul");
  require_rank2(B.shape(), "matmul");
  if (A.dim(1) != B.dim(0))
    throw DimensionError("matmul: inner dimensions disagree for " +
                         shape_str(A.shape()) + " x " + shape_str(B.shape()));
  Tensor<T> out({A.dim(0), B.dim(1)});
  as_mat(out).noalias() = as_mat(A) * as_mat(B);
  return a.tape->record(OpKind::MatMul, std::move(out), {a, b},
                        [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          const auto G = as_mat(g);
                          if (auto* ga = t.grad_sink(a))
                            as_mat(*ga).noalias() += G * as_mat(t.value(b)).transpose();
                          if (auto* gb = t.grad_sink(b))
                            as_mat(*gb).noalias() += as_mat(t.value(a)).transpose() * G;
                        });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b, T alpha) {
  const auto& A = a.value();
  const auto& B = b.value();
  require_rank2(A.shape(), "matmul_nt");
  require_rank2(B.shape(), "matmul_nt");
  if (A.dim(1) != B.dim(1))
    throw DimensionError("matmul_nt: inner dimensions disagree for " +
                         shape_str(A.shape()) + " x " + shape_str(B.shape()) + "^T");
  Tensor<T> out({A.dim(0), B.dim(0)});
  as_mat(out).noalias() = alpha * (as_mat(A) * as_mat(B).transpose());
  return a.tape->record(OpKind::MatMulNT, std::move(out), {a, b},
                        [a, b, alpha](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          const auto G = as_mat(g);
                          if (auto* ga = t.grad_sink(a))
                            as_mat(*ga).noalias() += alpha * (G * as_mat(t.value(b)));
                          if (auto* gb = t.grad_sink(b))
                            as_mat(*gb).noalias() +=
                                alpha * (G.transpose() * as_mat(t.value(a)));
                        });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require_same(A.shape(), B.shape(), "add");
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  return a.tape->record(OpKind::Add, std::move(out), {a, b},
                        [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          accumulate(t.grad_sink(a), g);
                          accumulate(t.grad_sink(b), g);
                        });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require_same(A.shape(), B.shape(), "sub");
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] - B[i];
  return a.tape->record(OpKind::Sub, std::move(out), {a, b},
                        [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          accumulate(t.grad_sink(a), g);
                          if (auto* gb = t.grad_sink(b))
                            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
                        });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require_same(A.shape(), B.shape(), "mul");
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return a.tape->record(OpKind::Mul, std::move(out), {a, b},
                        [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          const auto& av = t.value(a);
                          const auto& bv = t.value(b);
                          if (auto* ga = t.grad_sink(a))
                            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
                          if (auto* gb = t.grad_sink(b))
                            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
                        });
}

template <typename T>
Var<T> scale(Var<T> a, T c) {
  const auto& A = a.value();
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * c;
  return a.tape->record(OpKind::Scale, std::move(out), {a},
                        [a, c](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          if (auto* ga = t.grad_sink(a))
                            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * c;
                        });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T c) {
  const auto& A = a.value();
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + c;
  return a.tape->record(OpKind::AddScalar, std::move(out), {a},
                        [a](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          accumulate(t.grad_sink(a), g);
                        });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> b) {
  const auto& X = x.value();
  const auto& B = b.value();
  const std::size_t n = X.shape().back();
  if (B.rank() != 1 || B.dim(0) != n)
    throw DimensionError("add_bias: bias " + shape_str(B.shape()) +
                         " does not match last axis of " + shape_str(X.shape()));
  Tensor<T> out(X.shape());
  const std::size_t rows = X.size() / n;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = X[r * n + j] + B[j];
  return x.tape->record(OpKind::AddBias, std::move(out), {x, b},
                        [x, b, n, rows](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          accumulate(t.grad_sink(x), g);
                          if (auto* gb = t.grad_sink(b))
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g[r * n + j];
                        });
}

template <typename T>
Var<T> scale_rows(Var<T> x, Var<T> s) {
  const auto& X = x.value();
  const auto& S = s.value();
  require_rank2(X.shape(), "scale_rows");
  const std::size_t m = X.dim(0), n = X.dim(1);
  if (S.size() != m)
    throw DimensionError("scale_rows: scale " + shape_str(S.shape()) +
                         " does not match rows of " + shape_str(X.shape()));
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = X[i * n + j] * S[i];
  return x.tape->record(OpKind::ScaleRows, std::move(out), {x, s},
                        [x, s, m, n](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          const auto& xv = t.value(x);
                          const auto& sv = t.value(s);
                          if (auto* gx = t.grad_sink(x))
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j)
                                (*gx)[i * n + j] += g[i * n + j] * sv[i];
                          if (auto* gs = t.grad_sink(s))
                            for (std::size_t i = 0; i < m; ++i) {
                              T acc = 0;
                              for (std::size_t j = 0; j < n; ++j)
                                acc += g[i * n + j] * xv[i * n + j];
                              (*gs)[i] += acc;
                            }
                        });
}

template <typename T>
Var<T> relu(Var<T> x) {
  const auto& X = x.value();
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] < T(0) ? T(0) : X[i];
  return x.tape->record(OpKind::Relu, std::move(out), {x},
                        [x](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          const auto& xv = t.value(x);
                          if (auto* gx = t.grad_sink(x))
                            for (std::size_t i = 0; i < g.size(); ++i)
                              if (xv[i] > T(0)) (*gx)[i] += g[i];
                        });
}

template <typename T>
Var<T> sum(Var<T> x) {
  const auto& X = x.value();
  T acc = 0;
  for (auto v : X.values()) acc += v;
  return x.tape->record(OpKind::Sum, Tensor<T>::scalar(acc), {x},
                        [x](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          if (auto* gx = t.grad_sink(x))
                            for (auto& v : gx->values()) v += g[0];
                        });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const auto& X = x.value();
  T acc = 0;
  for (auto v : X.values()) acc += v;
  const T inv = T(1) / static_cast<T>(X.size());
  return x.tape->record(OpKind::Mean, Tensor<T>::scalar(acc * inv), {x},
                        [x, inv](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          if (auto* gx = t.grad_sink(x))
                            for (auto& v : gx->values()) v += g[0] * inv;
                        });
}

template <typename T>
Var<T> mean_axis(Var<T> x, std::size_t axis) {
  const auto& X = x.value();
  const auto s = split_at(X.shape(), axis, "mean_axis");
  Shape out_shape;
  for (std::size_t i = 0; i < X.rank(); ++i)
    if (i != axis) out_shape.push_back(X.dim(i));
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor<T> out(out_shape);
  const T inv = T(1) / static_cast<T>(s.extent);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t a = 0; a < s.extent; ++a) {
      const T* src = X.data() + (o * s.extent + a) * s.inner;
      T* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  for (auto& v : out.values()) v *= inv;
  return x.tape->record(OpKind::MeanAxis, std::move(out), {x},
                        [x, s, inv](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          auto* gx = t.grad_sink(x);
                          if (!gx) return;
                          for (std::size_t o = 0; o < s.outer; ++o)
                            for (std::size_t a = 0; a < s.extent; ++a) {
                              T* dst = gx->data() + (o * s.extent + a) * s.inner;
                              const T* src = g.data() + o * s.inner;
                              for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i] * inv;
                            }
                        });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  const auto& X = x.value();
  const auto& G = gamma.value();
  const auto& B = beta.value();
  const std::size_t n = X.shape().back();
  if (G.rank() != 1 || G.dim(0) != n || B.rank() != 1 || B.dim(0) != n)
    throw DimensionError("layer_norm: gamma " + shape_str(G.shape()) + " / beta " +
                         shape_str(B.shape()) + " do not match last axis of " +
                         shape_str(X.shape()));
  const std::size_t rows = X.size() / n;
  Tensor<T> out(X.shape());
  auto xhat = std::make_shared<Tensor<T>>(X.shape());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = X.data() + r * n;
    T mu = 0;
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<T>(n);
    T var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(n);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const T h = (xr[j] - mu) * is;
      (*xhat)[r * n + j] = h;
      out[r * n + j] = h * G[j] + B[j];
    }
  }
  return x.tape->record(
      OpKind::LayerNorm, std::move(out), {x, gamma, beta},
      [x, gamma, beta, n, rows, xhat, inv_std](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
        const auto& gv = t.value(gamma);
        if (auto* gg = t.grad_sink(gamma))
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < n; ++j)
              (*gg)[j] += g[r * n + j] * (*xhat)[r * n + j];
        if (auto* gb = t.grad_sink(beta))
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g[r * n + j];
        auto* gx = t.grad_sink(x);
        if (!gx) return;
        std::vector<T> dxhat(n);
        for (std::size_t r = 0; r < rows; ++r) {
          T m1 = 0, m2 = 0;
          for (std::size_t j = 0; j < n; ++j) {
            dxhat[j] = g[r * n + j] * gv[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * (*xhat)[r * n + j];
          }
          m1 /= static_cast<T>(n);
          m2 /= static_cast<T>(n);
          const T is = (*inv_std)[r];
          for (std::size_t j = 0; j < n; ++j)
            (*gx)[r * n + j] += is * (dxhat[j] - m1 - (*xhat)[r * n + j] * m2);
        }
      });
}

template <typename T>
Var<T> dropout(Var<T> x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0))
    throw ValidationError("dropout probability must lie in [0, 1), got " +
                          std::to_string(p));
  if (!training || p == 0.0) return x;
  const auto& X = x.value();
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  auto mask = std::make_shared<std::vector<T>>(X.size());
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    (*mask)[i] = rng.uniform() < p ? T(0) : keep_scale;
    out[i] = X[i] * (*mask)[i];
  }
  return x.tape->record(OpKind::Dropout, std::move(out), {x},
                        [x, mask](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          if (auto* gx = t.grad_sink(x))
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*gx)[i] += g[i] * (*mask)[i];
                        });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return x.tape->record(OpKind::Reshape, std::move(out), {x},
                        [x](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          accumulate(t.grad_sink(x), g);
                        });
}

template <typename T>
Var<T> flatten(Var<T> x) {
  return reshape(x, Shape{x.value().size()});
}

template <typename T>
Var<T> concat(std::span<const Var<T>> xs, std::size_t axis) {
  if (xs.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = xs[0].value().shape();
  const auto base = split_at(first, axis, "concat");
  Shape out_shape = first;
  std::size_t total = 0;
  std::vector<std::size_t> extents;
  for (const auto& v : xs) {
    const Shape& s = v.value().shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i)
      if (i != axis && s[i] != first[i]) ok = false;
    if (!ok)
      throw DimensionError("concat: shape " + shape_str(s) + " incompatible with " +
                           shape_str(first) + " along axis " + std::to_string(axis));
    extents.push_back(s[axis]);
    total += s[axis];
  }
  out_shape[axis] = total;
  Tensor<T> out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto& X = xs[k].value();
    const std::size_t chunk = extents[k] * base.inner;
    for (std::size_t o = 0; o < base.outer; ++o)
      std::copy_n(X.data() + o * chunk, chunk,
                  out.data() + o * total * base.inner + offset * base.inner);
    offset += extents[k];
  }
  std::vector<Var<T>> inputs(xs.begin(), xs.end());
  return xs[0].tape->record(
      OpKind::Concat, std::move(out), xs,
      [inputs, extents, base, total](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          const std::size_t chunk = extents[k] * base.inner;
          if (auto* gx = t.grad_sink(inputs[k]))
            for (std::size_t o = 0; o < base.outer; ++o) {
              const T* src = g.data() + o * total * base.inner + offset * base.inner;
              T* dst = gx->data() + o * chunk;
              for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
          offset += extents[k];
        }
      });
}

template <typename T>
Var<T> slice(Var<T> x, std::size_t axis, std::size_t start, std::size_t length) {
  const auto& X = x.value();
  const auto s = split_at(X.shape(), axis, "slice");
  if (length == 0 || start + length > s.extent)
    throw DimensionError("slice: range [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") out of bounds for axis " +
                         std::to_string(axis) + " of " + shape_str(X.shape()));
  Shape out_shape = X.shape();
  out_shape[axis] = length;
  Tensor<T> out(out_shape);
  const std::size_t chunk = length * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(X.data() + (o * s.extent + start) * s.inner, chunk,
                out.data() + o * chunk);
  return x.tape->record(OpKind::Slice, std::move(out), {x},
                        [x, s, start, chunk](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          auto* gx = t.grad_sink(x);
                          if (!gx) return;
                          for (std::size_t o = 0; o < s.outer; ++o) {
                            T* dst = gx->data() + (o * s.extent + start) * s.inner;
                            const T* src = g.data() + o * chunk;
                            for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                          }
                        });
}

template <typename T>
Var<T> softmax(Var<T> x, std::size_t axis) {
  const auto& X = x.value();
  const auto s = split_at(X.shape(), axis, "softmax");
  Tensor<T> out(X.shape());
  if (s.inner == 1) {
    std::copy(X.data(), X.data() + X.size(), out.data());
    softmax_rows(MatMap<T>(out.data(), static_cast<Eigen::Index>(s.outer),
                           static_cast<Eigen::Index>(s.extent)));
  } else {
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.extent * s.inner + i;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t a = 0; a < s.extent; ++a) mx = std::max(mx, X[base + a * s.inner]);
        T z = 0;
        for (std::size_t a = 0; a < s.extent; ++a) {
          const T e = std::exp(X[base + a * s.inner] - mx);
          out[base + a * s.inner] = e;
          z += e;
        }
        const T inv = T(1) / z;
        for (std::size_t a = 0; a < s.extent; ++a) out[base + a * s.inner] *= inv;
      }
  }
  return x.tape->record(
      OpKind::Softmax, std::move(out), {x},
      [x, s](Tape<T>& t, const Tensor<T>& y, const Tensor<T>& g) {
        auto* gx = t.grad_sink(x);
        if (!gx) return;
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.extent * s.inner + i;
            T dot = 0;
            for (std::size_t a = 0; a < s.extent; ++a)
              dot += g[base + a * s.inner] * y[base + a * s.inner];
            for (std::size_t a = 0; a < s.extent; ++a) {
              const std::size_t k = base + a * s.inner;
              (*gx)[k] += y[k] * (g[k] - dot);
            }
          }
      });
}

template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, std::size_t num_heads, T scale,
                 std::vector<Tensor<T>>* probabilities) {
  const auto& Q = q.value();
  const auto& K = k.value();
  const auto& V = v.value();
  require_rank2(Q.shape(), "attention");
  require_same(Q.shape(), K.shape(), "attention");
  require_same(Q.shape(), V.shape(), "attention");
  const std::size_t n = Q.dim(0), d = Q.dim(1);
  if (num_heads == 0 || d % num_heads != 0)
    throw DimensionError("attention: width " + std::to_string(d) +
                         " not divisible by " + std::to_string(num_heads) + " heads");
  const auto dh = static_cast<Eigen::Index>(d / num_heads);
  const auto N = static_cast<Eigen::Index>(n);
  auto probs = std::make_shared<std::vector<RowMat<T>>>(num_heads);
  Tensor<T> out({n, d});
  for (std::size_t h = 0; h < num_heads; ++h) {
    const auto c0 = static_cast<Eigen::Index>(h) * dh;
    auto& P = (*probs)[h];
    P.resize(N, N);
    P.noalias() = scale * (as_mat(Q).middleCols(c0, dh) * as_mat(K).middleCols(c0, dh).transpose());
    softmax_rows(P);
    as_mat(out).middleCols(c0, dh).noalias() = P * as_mat(V).middleCols(c0, dh);
  }
  if (probabilities) {
    probabilities->clear();
    for (const auto& P : *probs) {
      Tensor<T> t({n, n});
      as_mat(t) = P;
      probabilities->push_back(std::move(t));
    }
  }
  return q.tape->record(
      OpKind::Attention, std::move(out), {q, k, v},
      [q, k, v, probs, dh, N, scale](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
        auto* gq = t.grad_sink(q);
        auto* gk = t.grad_sink(k);
        auto* gv = t.grad_sink(v);
        const auto G = as_mat(g);
        const auto Qm = as_mat(t.value(q));
        const auto Km = as_mat(t.value(k));
        const auto Vm = as_mat(t.value(v));
        RowMat<T> dP(N, N);
        for (std::size_t h = 0; h < probs->size(); ++h) {
          const auto c0 = static_cast<Eigen::Index>(h) * dh;
          const auto& P = (*probs)[h];
          const auto Gh = G.middleCols(c0, dh);
          if (gv) as_mat(*gv).middleCols(c0, dh).noalias() += P.transpose() * Gh;
          if (!gq && !gk) continue;
          dP.noalias() = Gh * Vm.middleCols(c0, dh).transpose();
          // dS = P * (dP - rowsum(dP * P)), scaled by the logit scale.
          for (Eigen::Index r = 0; r < N; ++r) {
            const T dot = (dP.row(r).array() * P.row(r).array()).sum();
            dP.row(r).array() = scale * P.row(r).array() * (dP.row(r).array() - dot);
          }
          if (gq) as_mat(*gq).middleCols(c0, dh).noalias() += dP * Km.middleCols(c0, dh);
          if (gk) as_mat(*gk).middleCols(c0, dh).noalias() += dP.transpose() * Qm.middleCols(c0, dh);
        }
      });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> labels) {
  const auto& L = logits.value();
  require_rank2(L.shape(), "cross_entropy");
  const std::size_t batch = L.dim(0), classes = L.dim(1);
  if (labels.size() != batch)
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits " + shape_str(L.shape()));
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw ValidationError("cross_entropy: label " + std::to_string(y) +
                            " outside [0, " + std::to_string(classes) + ")");
  auto probs = std::make_shared<Tensor<T>>(L.shape());
  T total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const T* row = L.data() + b * classes;
    T mx = *std::max_element(row, row + classes);
    T z = 0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    const T lse = mx + std::log(z);
    total += lse - row[labels[b]];
    for (std::size_t c = 0; c < classes; ++c)
      (*probs)[b * classes + c] = std::exp(row[c] - lse);
  }
  const T inv_b = T(1) / static_cast<T>(batch);
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.tape->record(
      OpKind::CrossEntropy, Tensor<T>::scalar(total * inv_b), {logits},
      [logits, probs, ys, classes, inv_b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
        auto* gl = t.grad_sink(logits);
        if (!gl) return;
        const T scale = g[0] * inv_b;
        for (std::size_t b = 0; b < ys.size(); ++b)
          for (std::size_t c = 0; c < classes; ++c) {
            const T target = static_cast<int>(c) == ys[b] ? T(1) : T(0);
            (*gl)[b * classes + c] += scale * ((*probs)[b * classes + c] - target);
          }
      });
}

#define NEUROMOE_INSTANTIATE_OPS(T)                                              \
  template Var<T> matmul(Var<T>, Var<T>);                                        \
  template Var<T> matmul_nt(Var<T>, Var<T>, T);                                  \
  template Var<T> add(Var<T>, Var<T>);                                           \
  template Var<T> sub(Var<T>, Var<T>);                                           \
  template Var<T> mul(Var<T>, Var<T>);                                           \
  template Var<T> scale(Var<T>, T);                                              \
  template Var<T> add_scalar(Var<T>, T);                                         \
  template Var<T> add_bias(Var<T>, Var<T>);                                      \
  template Var<T> scale_rows(Var<T>, Var<T>);                                    \
  template Var<T> relu(Var<T>);                                                  \
  template Var<T> sum(Var<T>);                                                   \
  template Var<T> mean(Var<T>);                                                  \
  template Var<T> mean_axis(Var<T>, std::size_t);                                \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                         \
  template Var<T> dropout(Var<T>, double, bool, Rng&);                           \
  template Var<T> reshape(Var<T>, Shape);                                        \
  template Var<T> flatten(Var<T>);                                               \
  template Var<T> concat(std::span<const Var<T>>, std::size_t);                  \
  template Var<T> slice(Var<T>, std::size_t, std::size_t, std::size_t);          \
  template Var<T> softmax(Var<T>, std::size_t);                                  \
  template Var<T> attention(Var<T>, Var<T>, Var<T>, std::size_t, T,              \
                            std::vector<Tensor<T>>*);                            \
  template Var<T> cross_entropy(Var<T>, std::span<const int>);

NEUROMOE_INSTANTIATE_OPS(float)
NEUROMOE_INSTANTIATE_OPS(double)
#undef NEUROMOE_INSTANTIATE_OPS

}  // namespace ops

template struct Parameter<float>;
template struct Parameter<double>;
template class ParameterStore<float>;
template class ParameterStore<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace neuromoe

// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include "neuromoe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "neuromoe/error.hpp"

namespace neuromoe {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Contract: return "contract error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Checksum: return "checksum error";
    case ErrorKind::ConfigMismatch: return "config-incompatibility error";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Numeric: return "numeric error";
  }
  return "error";
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must be non-empty");
  for (auto d : shape)
    if (d == 0)
      throw DimensionError("tensor shape " + shape_str(shape) +
                           " has a zero dimension");
}
}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(numel(shape_), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != numel(shape_))
    throw DimensionError("tensor of shape " + shape_str(shape_) + " needs " +
                         std::to_string(numel(shape_)) + " values, got " +
                         std::to_string(data_.size()));
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (numel(shape) != data_.size())
    throw DimensionError("cannot reshape " + shape_str(shape_) + " to " +
                         shape_str(shape));
  return Tensor(std::move(shape), data_);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace neuromoe

// Copyright 2026 The SM3 Optimizer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sm3/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "sm3/error.h"

namespace sm3 {

namespace {

void check_finite(const ParamTensor& t, const char* what) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw Error(ErrorCode::kNonFinite,
                  fmt::format("{}: non-finite value at index {}", what, i), i);
    }
  }
}

void check_same_shape(const ParamTensor& a, const ParamTensor& b) {
  if (!(a.shape() == b.shape())) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("shape mismatch: {} vs {}", a.shape().to_string(),
                            b.shape().to_string()));
  }
}

double apply(BinaryOp op, double x, double y) {
  switch (op) {
    case BinaryOp::kAdd: return x + y;
    case BinaryOp::kSub: return x - y;
    case BinaryOp::kMul: return x * y;
    case BinaryOp::kDiv: return safe_div(x, y);
  }
  return 0.0;
}

}  // namespace

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "shape must have rank >= 1");
  }
  strides_.assign(dims_.size(), 1);
  size_ = 1;
  for (std::size_t a = dims_.size(); a-- > 0;) {
    if (dims_[a] == 0) {
      throw Error(ErrorCode::kShapeMismatch,
                  fmt::format("dimension {} of shape is zero", a), a);
    }
    strides_[a] = size_;
    size_ *= dims_[a];
  }
}

std::size_t Shape::flat_index(std::span<const std::size_t> multi) const {
  if (multi.size() != rank()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("multi-index of length {} for rank {}",
                            multi.size(), rank()));
  }
  std::size_t flat = 0;
  for (std::size_t a = 0; a < rank(); ++a) {
    if (multi[a] >= dims_[a]) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  fmt::format("coordinate {} out of range on axis {}",
                              multi[a], a),
                  a);
    }
    flat += multi[a] * strides_[a];
  }
  return flat;
}

std::vector<std::size_t> Shape::multi_index(std::size_t flat) const {
  if (flat >= size_) {
    throw Error(ErrorCode::kIndexOutOfRange,
                fmt::format("flat index {} out of range {}", flat, size_),
                flat);
  }
  std::vector<std::size_t> multi(rank());
  for (std::size_t a = 0; a < rank(); ++a) {
    multi[a] = flat / strides_[a];
    flat %= strides_[a];
  }
  return multi;
}

std::string Shape::to_string() const {
  return fmt::format("{}", fmt::join(dims_, "x"));
}

ParamTensor::ParamTensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_.size(), fill) {
  check_finite(*this, "ParamTensor");
}

ParamTensor::ParamTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} values for shape {}", data_.size(),
                            shape_.to_string()));
  }
  check_finite(*this, "ParamTensor");
}

bool ParamTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

double safe_div(double numerator, double denominator) {
  if (denominator == 0.0) {
    if (numerator == 0.0) return 0.0;
    throw Error(ErrorCode::kDivisionByZero,
                fmt::format("division of {} by zero", numerator));
  }
  return numerator / denominator;
}

ParamTensor elementwise(BinaryOp op, const ParamTensor& a,
                        const ParamTensor& b) {
  check_same_shape(a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply(op, a[i], b[i]);
  return ParamTensor(a.shape(), std::move(out));
}

ParamTensor elementwise(BinaryOp op, const ParamTensor& a, double b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply(op, a[i], b);
  return ParamTensor(a.shape(), std::move(out));
}

ParamTensor elementwise(UnaryOp op, const ParamTensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = op == UnaryOp::kSquare ? a[i] * a[i] : std::sqrt(a[i]);
  }
  return ParamTensor(a.shape(), std::move(out));
}

ParamTensor scale(const ParamTensor& a, double c) {
  return elementwise(BinaryOp::kMul, a, c);
}

void slice_reduce_into(std::span<const double> values, const Shape& shape,
                       std::size_t axis, ReduceOp op, std::span<double> out) {
  if (axis >= shape.rank()) {
    throw Error(ErrorCode::kAxisOutOfRange,
                fmt::format("axis {} out of range for rank {}", axis,
                            shape.rank()),
                axis);
  }
  const std::size_t n = shape.dim(axis);
  const std::size_t stride = shape.stride(axis);
  if (out.size() != n || values.size() != shape.size()) {
    throw Error(ErrorCode::kLengthMismatch, "slice_reduce buffer size");
  }
  const double init = op == ReduceOp::kMax
                          ? -std::numeric_limits<double>::infinity()
                          : std::numeric_limits<double>::infinity();
  std::fill(out.begin(), out.end(), init);
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    const std::size_t i = (flat / stride) % n;
    out[i] = op == ReduceOp::kMax ? std::max(out[i], values[flat])
                                  : std::min(out[i], values[flat]);
  }
}

std::vector<double> slice_reduce(const ParamTensor& t, std::size_t axis,
                                 ReduceOp op) {
  if (axis >= t.shape().rank()) {
    throw Error(ErrorCode::kAxisOutOfRange,
                fmt::format("axis {} out of range for rank {}", axis,
                            t.shape().rank()),
                axis);
  }
  std::vector<double> out(t.shape().dim(axis));
  slice_reduce_into(t.values(), t.shape(), axis, op, out);
  return out;
}

void broadcast_min_into(std::span<const std::span<const double>> vectors,
                        std::span<const std::size_t> axes, const Shape& shape,
                        std::span<double> out) {
  if (vectors.size() != axes.size() || axes.empty()) {
    throw Error(ErrorCode::kLengthMismatch,
                "broadcast_min needs one vector per listed axis");
  }
  for (std::size_t j = 0; j < axes.size(); ++j) {
    if (axes[j] >= shape.rank()) {
      throw Error(ErrorCode::kAxisOutOfRange,
                  fmt::format("axis {} out of range", axes[j]), axes[j]);
    }
    if (vectors[j].size() != shape.dim(axes[j])) {
      throw Error(ErrorCode::kLengthMismatch,
                  fmt::format("vector for axis {} has length {}, expected {}",
                              axes[j], vectors[j].size(),
                              shape.dim(axes[j])),
                  axes[j]);
    }
  }
  if (out.size() != shape.size()) {
    throw Error(ErrorCode::kLengthMismatch, "broadcast_min output size");
  }
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < axes.size(); ++j) {
      const std::size_t a = axes[j];
      m = std::min(m, vectors[j][(flat / shape.stride(a)) % shape.dim(a)]);
    }
    out[flat] = m;
  }
}

ParamTensor broadcast_min(std::span<const std::vector<double>> vectors,
                          const Shape& shape) {
  if (vectors.size() != shape.rank()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} vectors for rank {}", vectors.size(),
                            shape.rank()));
  }
  std::vector<std::span<const double>> views(vectors.begin(), vectors.end());
  std::vector<std::size_t> axes(shape.rank());
  for (std::size_t a = 0; a < axes.size(); ++a) axes[a] = a;
  std::vector<double> out(shape.size());
  broadcast_min_into(views, axes, shape, out);
  return ParamTensor(shape, std::move(out));
}

}  // namespace sm3

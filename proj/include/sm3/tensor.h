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

#ifndef SM3_TENSOR_H_
#define SM3_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sm3 {

// Dimensions of a dense rank-p tensor, stored row-major. Axes are 0-based.
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::vector<std::size_t> dims);
  Shape(std::initializer_list<std::size_t> dims)
      : Shape(std::vector<std::size_t>(dims)) {}

  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return size_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const { return dims_; }

  // Row-major stride of `axis`: product of all later dims.
  std::size_t stride(std::size_t axis) const { return strides_.at(axis); }

  std::size_t flat_index(std::span<const std::size_t> multi) const;
  std::vector<std::size_t> multi_index(std::size_t flat) const;

  std::string to_string() const;

  friend bool operator==(const Shape& a, const Shape& b) {
    return a.dims_ == b.dims_;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Flat buffer of 64-bit scalars with a shape. Every entry is finite; the
// constructors and all free functions below enforce it.
class ParamTensor {
 public:
  ParamTensor() = default;
  explicit ParamTensor(Shape shape, double fill = 0.0);
  ParamTensor(Shape shape, std::vector<double> data);

  static ParamTensor zeros(const Shape& shape) { return ParamTensor(shape); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const { return data_; }
  std::span<double> mutable_values() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const ParamTensor& a, const ParamTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

enum class BinaryOp { kAdd, kSub, kMul, kDiv };
enum class UnaryOp { kSquare, kSqrt };
enum class ReduceOp { kMax, kMin };

// Division follows the 0/0 = 0 convention; x/0 with x != 0 throws
// kDivisionByZero.
double safe_div(double numerator, double denominator);

ParamTensor elementwise(BinaryOp op, const ParamTensor& a, const ParamTensor& b);
ParamTensor elementwise(BinaryOp op, const ParamTensor& a, double b);
ParamTensor elementwise(UnaryOp op, const ParamTensor& a);
ParamTensor scale(const ParamTensor& a, double c);

// out[i] = op over all entries whose `axis` coordinate equals i.
std::vector<double> slice_reduce(const ParamTensor& t, std::size_t axis,
                                 ReduceOp op);
void slice_reduce_into(std::span<const double> values, const Shape& shape,
                       std::size_t axis, ReduceOp op, std::span<double> out);

// out[(i_0, ..., i_{p-1})] = min_a vectors[a][i_a], one vector per axis.
ParamTensor broadcast_min(std::span<const std::vector<double>> vectors,
                          const Shape& shape);

// Same, restricted to `axes`; vectors[j] belongs to axes[j].
void broadcast_min_into(std::span<const std::span<const double>> vectors,
                        std::span<const std::size_t> axes, const Shape& shape,
                        std::span<double> out);

}  // namespace sm3

#endif  // SM3_TENSOR_H_

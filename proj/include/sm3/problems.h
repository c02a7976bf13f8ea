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

#ifndef SM3_PROBLEMS_H_
#define SM3_PROBLEMS_H_

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <vector>

#include "sm3/tensor.h"

namespace sm3 {

// Online convex loss sequence l_1, l_2, ... over a fixed parameter shape.
// Implementations are immutable; losses and gradients are pure functions of
// (seed, w, t) and may be queried concurrently. Steps t are 1-based.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string_view name() const = 0;
  virtual const Shape& shape() const = 0;
  virtual double loss(const ParamTensor& w, std::int64_t t) const = 0;
  virtual ParamTensor gradient(const ParamTensor& w, std::int64_t t) const = 0;

  // Fixed comparator w* for regret over rounds 1..horizon, if known.
  virtual std::optional<ParamTensor> comparator(std::int64_t horizon) const {
    (void)horizon;
    return std::nullopt;
  }
  // A-priori bound D on max_t |w_t - w*|_inf, if the problem has one.
  virtual std::optional<double> diameter() const { return std::nullopt; }
  // Deterministic training objective (e.g. full-dataset loss), if any.
  virtual std::optional<double> objective(const ParamTensor& w) const {
    (void)w;
    return std::nullopt;
  }
  // False when gradients depend only on (seed, t).
  virtual bool gradient_depends_on_iterate() const = 0;
};

// l_t(w) = 0.5 |w - c_t|^2 with c_t(i) = center(i) + noise * U[-1, 1].
// Convex (strongly). w* = center.
struct QuadraticOptions {
  Shape shape{1};
  std::uint64_t seed = 0;
  double center_scale = 1.0;  // center(i) ~ U[-center_scale, center_scale]
  double noise = 0.5;
  std::optional<std::vector<double>> center;  // overrides the random center
};

class QuadraticProblem final : public Problem {
 public:
  explicit QuadraticProblem(QuadraticOptions options);

  std::string_view name() const override { return "quadratic"; }
  const Shape& shape() const override { return options_.shape; }
  double loss(const ParamTensor& w, std::int64_t t) const override;
  ParamTensor gradient(const ParamTensor& w, std::int64_t t) const override;
  std::optional<ParamTensor> comparator(std::int64_t horizon) const override;
  std::optional<double> objective(const ParamTensor& w) const override;
  bool gradient_depends_on_iterate() const override { return true; }

  std::vector<double> target(std::int64_t t) const;  // c_t
  const std::vector<double>& center() const { return center_; }

 private:
  QuadraticOptions options_;
  std::vector<double> center_;
};

std::unique_ptr<Problem> quadratic_problem(std::size_t dim, std::uint64_t seed);

// l_t(w) = <g_t, w> with g_t(i) = bias(i) + noise * U[-1, 1]. The comparator
// for a horizon T minimises sum_t <g_t, w> over the l_inf ball of `radius`:
// w* = -radius * sign(sum_t g_t), with 0 where the sum vanishes. D = 2 radius.
struct LinearAdversaryOptions {
  Shape shape{1};
  double radius = 1.0;
  std::uint64_t seed = 0;
  double bias_scale = 0.5;  // bias(i) ~ U[-bias_scale, bias_scale]
  double noise = 0.5;
  std::optional<std::vector<double>> bias;  // overrides the random bias
};

class LinearAdversaryProblem final : public Problem {
 public:
  explicit LinearAdversaryProblem(LinearAdversaryOptions options);

  std::string_view name() const override { return "linear_adversary"; }
  const Shape& shape() const override { return options_.shape; }
  double loss(const ParamTensor& w, std::int64_t t) const override;
  ParamTensor gradient(const ParamTensor& w, std::int64_t t) const override;
  std::optional<ParamTensor> comparator(std::int64_t horizon) const override;
  std::optional<double> diameter() const override {
    return 2.0 * options_.radius;
  }
  bool gradient_depends_on_iterate() const override { return false; }

  double radius() const { return options_.radius; }
  std::vector<double> linear_term(std::int64_t t) const;  // g_t

 private:
  LinearAdversaryOptions options_;
  std::vector<double> bias_;
};

std::unique_ptr<Problem> linear_adversary_problem(std::size_t dim,
                                                  double radius,
                                                  std::uint64_t seed);

// Row / column activity of an m x n weight matrix. Each example activates row
// i with probability row_active_prob and gives it magnitude
// row_scales[i] * U[0.5, 1] with a random sign; columns likewise. Scale
// vectors shorter than the dimension are expanded block-wise, so {1, 10} on 32
// rows means rows 0-15 use 1 and rows 16-31 use 10.
struct ActivationPatternSpec {
  Shape shape{1, 1};
  std::vector<double> row_scales{1.0};
  std::vector<double> col_scales{1.0};
  double row_active_prob = 1.0;
  double col_active_prob = 1.0;
};

void validate_pattern(const ActivationPatternSpec& pattern);

// Bilinear logistic regression on a finite synthetic dataset:
//   s = u^T W x,  l(W) = mean_batch log(1 + exp(-y s)) + (l2 / 2) |W|^2
// with (u, x) drawn from the activation pattern and y the sign of a random
// teacher score, flipped with probability label_noise. The loss is convex in
// W (the score is linear) and each per-example gradient is the outer product
// -y sigmoid(-y s) u x^T, so active rows and columns share magnitudes.
// Step t uses examples (t-1)*batch .. t*batch-1 modulo `examples`.
struct SparseLogRegOptions {
  ActivationPatternSpec pattern;
  std::uint64_t seed = 0;
  std::size_t examples = 1024;
  std::size_t batch = 1;
  double label_noise = 0.05;
  double l2 = 1e-4;
  // Reference Adagrad run used to approximate w* (no closed form exists).
  std::int64_t comparator_steps = 100000;
  double comparator_lr = 0.5;
};

class SparseLogRegProblem final : public Problem {
 public:
  explicit SparseLogRegProblem(SparseLogRegOptions options);

  std::string_view name() const override { return "sparse_logreg"; }
  const Shape& shape() const override { return options_.pattern.shape; }
  double loss(const ParamTensor& w, std::int64_t t) const override;
  ParamTensor gradient(const ParamTensor& w, std::int64_t t) const override;
  std::optional<ParamTensor> comparator(std::int64_t horizon) const override;
  std::optional<double> objective(const ParamTensor& w) const override;
  bool gradient_depends_on_iterate() const override { return true; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  double example_margin(const ParamTensor& w, std::size_t e) const;
  std::size_t example_index(std::int64_t t, std::size_t b) const;

  SparseLogRegOptions options_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> u_;       // examples x rows
  std::vector<double> x_;       // examples x cols
  std::vector<double> labels_;  // +-1
  mutable std::once_flag comparator_once_;
  mutable std::optional<ParamTensor> comparator_;
};

std::unique_ptr<Problem> sparse_logreg_problem(const Shape& shape,
                                               const ActivationPatternSpec& pattern,
                                               std::uint64_t seed);

}  // namespace sm3

#endif  // SM3_PROBLEMS_H_

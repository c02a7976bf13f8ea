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

#include "sm3/problems.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sm3/error.h"
#include "sm3/optimizer.h"
#include "sm3/random.h"

namespace sm3 {

namespace {

// Stream keys; distinct per purpose so draws never alias.
constexpr std::uint64_t kKeyStatic = 1;
constexpr std::uint64_t kKeyStep = 2;
constexpr std::uint64_t kKeyExample = 3;
constexpr std::uint64_t kKeyTeacher = 4;

void check_params(const ParamTensor& w, const Shape& shape) {
  if (!(w.shape() == shape)) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("problem expects shape {}, got {}",
                            shape.to_string(), w.shape().to_string()));
  }
}

void check_step(std::int64_t t) {
  if (t < 1) {
    throw Error(ErrorCode::kIndexOutOfRange,
                fmt::format("loss queried at step {} < 1", t));
  }
}

std::vector<double> uniform_vector(SplitMix64 rng, std::size_t n,
                                   double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> expand_scales(const std::vector<double>& scales,
                                  std::size_t n, const char* what) {
  if (scales.empty() || n % scales.size() != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("{}: {} values do not divide dimension {}", what,
                            scales.size(), n));
  }
  const std::size_t block = n / scales.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = scales[i / block];
  return out;
}

}  // namespace

// -- Quadratic ----------------------------------------------------------------

QuadraticProblem::QuadraticProblem(QuadraticOptions options)
    : options_(std::move(options)) {
  const std::size_t d = options_.shape.size();
  if (options_.center) {
    if (options_.center->size() != d) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("quadratic center has {} entries, expected {}",
                              options_.center->size(), d));
    }
    center_ = *options_.center;
  } else {
    center_ = uniform_vector(SplitMix64(options_.seed).derive(kKeyStatic), d,
                             options_.center_scale);
  }
  if (!(options_.noise >= 0.0) || !std::isfinite(options_.noise)) {
    throw Error(ErrorCode::kInvalidConfig, "quadratic noise must be >= 0");
  }
}

std::vector<double> QuadraticProblem::target(std::int64_t t) const {
  check_step(t);
  SplitMix64 rng = SplitMix64(options_.seed)
                       .derive(kKeyStep)
                       .derive(static_cast<std::uint64_t>(t));
  std::vector<double> c(center_);
  for (double& x : c) x += options_.noise * rng.uniform(-1.0, 1.0);
  return c;
}

double QuadraticProblem::loss(const ParamTensor& w, std::int64_t t) const {
  check_params(w, options_.shape);
  const auto c = target(t);
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += (w[i] - c[i]) * (w[i] - c[i]);
  return 0.5 * s;
}

ParamTensor QuadraticProblem::gradient(const ParamTensor& w,
                                       std::int64_t t) const {
  check_params(w, options_.shape);
  auto c = target(t);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = w[i] - c[i];
  return ParamTensor(options_.shape, std::move(c));
}

std::optional<ParamTensor> QuadraticProblem::comparator(std::int64_t) const {
  return ParamTensor(options_.shape, center_);
}

// Expected loss: 0.5 |w - center|^2 + 0.5 d noise^2 / 3.
std::optional<double> QuadraticProblem::objective(const ParamTensor& w) const {
  check_params(w, options_.shape);
  double s = 0.0;
  for (std::size_t i = 0; i < center_.size(); ++i) {
    s += (w[i] - center_[i]) * (w[i] - center_[i]);
  }
  const double var = options_.noise * options_.noise / 3.0;
  return 0.5 * s + 0.5 * static_cast<double>(center_.size()) * var;
}

std::unique_ptr<Problem> quadratic_problem(std::size_t dim,
                                           std::uint64_t seed) {
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidConfig, "quadratic dim must be >= 1");
  }
  QuadraticOptions options;
  options.shape = Shape{dim};
  options.seed = seed;
  return std::make_unique<QuadraticProblem>(std::move(options));
}

// -- Linear adversary ---------------------------------------------------------

LinearAdversaryProblem::LinearAdversaryProblem(LinearAdversaryOptions options)
    : options_(std::move(options)) {
  if (!(options_.radius > 0.0) || !std::isfinite(options_.radius)) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("linear_adversary radius must be > 0, got {}",
                            options_.radius));
  }
  if (!(options_.noise >= 0.0) || !(options_.bias_scale >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "linear_adversary noise and bias_scale must be >= 0");
  }
  const std::size_t d = options_.shape.size();
  if (options_.bias) {
    if (options_.bias->size() != d) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("linear_adversary bias has {} entries, expected "
                              "{}",
                              options_.bias->size(), d));
    }
    bias_ = *options_.bias;
  } else {
    bias_ = uniform_vector(SplitMix64(options_.seed).derive(kKeyStatic), d,
                           options_.bias_scale);
  }
}

std::vector<double> LinearAdversaryProblem::linear_term(std::int64_t t) const {
  check_step(t);
  std::vector<double> g(bias_);
  if (options_.noise > 0.0) {
    SplitMix64 rng = SplitMix64(options_.seed)
                         .derive(kKeyStep)
                         .derive(static_cast<std::uint64_t>(t));
    for (double& x : g) x += options_.noise * rng.uniform(-1.0, 1.0);
  }
  return g;
}

double LinearAdversaryProblem::loss(const ParamTensor& w,
                                    std::int64_t t) const {
  check_params(w, options_.shape);
  const auto g = linear_term(t);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * w[i];
  return s;
}

ParamTensor LinearAdversaryProblem::gradient(const ParamTensor& w,
                                             std::int64_t t) const {
  check_params(w, options_.shape);
  return ParamTensor(options_.shape, linear_term(t));
}

std::optional<ParamTensor> LinearAdversaryProblem::comparator(
    std::int64_t horizon) const {
  std::vector<double> sum(bias_.size(), 0.0);
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const auto g = linear_term(t);
    for (std::size_t i = 0; i < g.size(); ++i) sum[i] += g[i];
  }
  std::vector<double> w(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    w[i] = sum[i] > 0.0 ? -options_.radius
                        : (sum[i] < 0.0 ? options_.radius : 0.0);
  }
  return ParamTensor(options_.shape, std::move(w));
}

std::unique_ptr<Problem> linear_adversary_problem(std::size_t dim,
                                                  double radius,
                                                  std::uint64_t seed) {
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidConfig, "linear_adversary dim must be >= 1");
  }
  LinearAdversaryOptions options;
  options.shape = Shape{dim};
  options.radius = radius;
  options.seed = seed;
  return std::make_unique<LinearAdversaryProblem>(std::move(options));
}

// -- Sparse logistic regression -----------------------------------------------

void validate_pattern(const ActivationPatternSpec& pattern) {
  if (pattern.shape.rank() != 2) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("activation pattern needs a matrix shape, got {}",
                            pattern.shape.to_string()));
  }
  for (const auto* scales : {&pattern.row_scales, &pattern.col_scales}) {
    for (double s : *scales) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw Error(ErrorCode::kInvalidConfig,
                    fmt::format("activation scales must be > 0, got {}", s));
      }
    }
  }
  expand_scales(pattern.row_scales, pattern.shape.dim(0), "row_scales");
  expand_scales(pattern.col_scales, pattern.shape.dim(1), "col_scales");
  for (double p : {pattern.row_active_prob, pattern.col_active_prob}) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("activation probability must lie in (0, 1], "
                              "got {}",
                              p));
    }
  }
}

SparseLogRegProblem::SparseLogRegProblem(SparseLogRegOptions options)
    : options_(std::move(options)) {
  const auto& pattern = options_.pattern;
  validate_pattern(pattern);
  if (options_.examples == 0 || options_.batch == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "sparse_logreg examples and batch must be >= 1");
  }
  if (!(options_.label_noise >= 0.0 && options_.label_noise < 0.5)) {
    throw Error(ErrorCode::kInvalidConfig,
                "sparse_logreg label_noise must lie in [0, 0.5)");
  }
  if (!(options_.l2 >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "sparse_logreg l2 must be >= 0");
  }
  rows_ = pattern.shape.dim(0);
  cols_ = pattern.shape.dim(1);
  const auto row_scales = expand_scales(pattern.row_scales, rows_, "row_scales");
  const auto col_scales = expand_scales(pattern.col_scales, cols_, "col_scales");

  const SplitMix64 root(options_.seed);
  const auto teacher =
      uniform_vector(root.derive(kKeyTeacher), rows_ * cols_, 1.0);

  const std::size_t n = options_.examples;
  u_.assign(n * rows_, 0.0);
  x_.assign(n * cols_, 0.0);
  labels_.assign(n, 1.0);
  auto draw = [](SplitMix64& rng, double scale, double p) {
    if (!rng.bernoulli(p)) return 0.0;
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    return sign * scale * rng.uniform(0.5, 1.0);
  };
  for (std::size_t e = 0; e < n; ++e) {
    SplitMix64 rng = root.derive(kKeyExample).derive(e);
    double* u = u_.data() + e * rows_;
    double* x = x_.data() + e * cols_;
    for (std::size_t i = 0; i < rows_; ++i) {
      u[i] = draw(rng, row_scales[i], pattern.row_active_prob);
    }
    for (std::size_t j = 0; j < cols_; ++j) {
      x[j] = draw(rng, col_scales[j], pattern.col_active_prob);
    }
    double score = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (u[i] == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) {
        score += u[i] * teacher[i * cols_ + j] * x[j];
      }
    }
    double y = score >= 0.0 ? 1.0 : -1.0;
    if (rng.bernoulli(options_.label_noise)) y = -y;
    labels_[e] = y;
  }
}

std::size_t SparseLogRegProblem::example_index(std::int64_t t,
                                               std::size_t b) const {
  const auto base = static_cast<std::size_t>(t - 1) * options_.batch + b;
  return base % options_.examples;
}

double SparseLogRegProblem::example_margin(const ParamTensor& w,
                                           std::size_t e) const {
  const double* u = u_.data() + e * rows_;
  const double* x = x_.data() + e * cols_;
  double score = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    if (u[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) row += w[i * cols_ + j] * x[j];
    score += u[i] * row;
  }
  return labels_[e] * score;
}

double SparseLogRegProblem::loss(const ParamTensor& w, std::int64_t t) const {
  check_params(w, shape());
  check_step(t);
  double s = 0.0;
  for (std::size_t b = 0; b < options_.batch; ++b) {
    s += softplus(-example_margin(w, example_index(t, b)));
  }
  double reg = 0.0;
  for (double v : w.values()) reg += v * v;
  return s / static_cast<double>(options_.batch) + 0.5 * options_.l2 * reg;
}

ParamTensor SparseLogRegProblem::gradient(const ParamTensor& w,
                                          std::int64_t t) const {
  check_params(w, shape());
  check_step(t);
  std::vector<double> g(w.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = options_.l2 * w[k];
  const double inv_batch = 1.0 / static_cast<double>(options_.batch);
  for (std::size_t b = 0; b < options_.batch; ++b) {
    const std::size_t e = example_index(t, b);
    const double coef =
        -labels_[e] * sigmoid(-example_margin(w, e)) * inv_batch;
    const double* u = u_.data() + e * rows_;
    const double* x = x_.data() + e * cols_;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (u[i] == 0.0) continue;
      const double cu = coef * u[i];
      for (std::size_t j = 0; j < cols_; ++j) g[i * cols_ + j] += cu * x[j];
    }
  }
  return ParamTensor(shape(), std::move(g));
}

std::optional<double> SparseLogRegProblem::objective(
    const ParamTensor& w) const {
  check_params(w, shape());
  double s = 0.0;
  for (std::size_t e = 0; e < options_.examples; ++e) {
    s += softplus(-example_margin(w, e));
  }
  double reg = 0.0;
  for (double v : w.values()) reg += v * v;
  return s / static_cast<double>(options_.examples) + 0.5 * options_.l2 * reg;
}

// Averaged iterate of a long reference Adagrad run over the second half of
// its steps; computed once and cached.
std::optional<ParamTensor> SparseLogRegProblem::comparator(
    std::int64_t) const {
  std::call_once(comparator_once_, [this] {
    const std::int64_t steps = std::max<std::int64_t>(options_.comparator_steps, 1);
    AdagradState state(shape().size());
    ParamTensor w(shape());
    std::vector<double> avg(w.size(), 0.0);
    std::int64_t counted = 0;
    for (std::int64_t t = 1; t <= steps; ++t) {
      const ParamTensor g = gradient(w, t);
      adagrad_step(state, w, g, options_.comparator_lr);
      if (t > steps / 2) {
        ++counted;
        for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += w[k];
      }
    }
    for (double& v : avg) v /= static_cast<double>(counted);
    comparator_ = ParamTensor(shape(), std::move(avg));
  });
  return comparator_;
}

std::unique_ptr<Problem> sparse_logreg_problem(
    const Shape& shape, const ActivationPatternSpec& pattern,
    std::uint64_t seed) {
  SparseLogRegOptions options;
  options.pattern = pattern;
  options.pattern.shape = shape;
  options.seed = seed;
  return std::make_unique<SparseLogRegProblem>(std::move(options));
}

}  // namespace sm3

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

#ifndef SM3_OPTIMIZER_H_
#define SM3_OPTIMIZER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sm3/cover.h"
#include "sm3/schedule.h"
#include "sm3/tensor.h"

namespace sm3 {

enum class Algorithm { kSm3I, kSm3II, kAdagrad, kAdam };

std::string_view algorithm_name(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);
bool uses_cover(Algorithm algorithm);

struct StepDiagnostics {
  // nu for SM3-I, nu' for SM3-II, gamma for Adagrad, bias-corrected second
  // moment for Adam.
  std::vector<double> nu;
  // lr / sqrt(nu(i)), or 0 where nu(i) == 0.
  std::vector<double> effective_lr;
  // Euclidean norm of the step actually subtracted from w.
  double update_norm = 0.0;
};

// SM3-I keeps one running sum per cover set:
//   mu_t(r) = mu_{t-1}(r) + max_{j in S_r} g_t(j)^2
//   nu_t(i) = min_{r : S_r contains i} mu_t(r)
struct Sm3IState {
  explicit Sm3IState(Cover c);

  Cover cover;
  std::vector<double> mu;
  std::int64_t step = 0;
};

// SM3-II keeps per-set maxima of its own per-coordinate estimates:
//   nu'_t(i) = min_{r : S_r contains i} mu'_{t-1}(r) + g_t(i)^2
//   mu'_t(r) = max_{j in S_r} nu'_t(j)
// `mu_prime` holds mu'_{t-1} while `scratch` collects mu'_t; they swap at the
// end of every step, so every nu'_t(i) reads only the previous round.
struct Sm3IIState {
  explicit Sm3IIState(Cover c);

  Cover cover;
  std::vector<double> mu_prime;
  std::vector<double> scratch;
  std::int64_t step = 0;
};

struct AdagradState {
  explicit AdagradState(std::size_t d) : gamma(d, 0.0) {}

  std::vector<double> gamma;
  std::int64_t step = 0;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState(std::size_t d, AdamParams p) : m(d, 0.0), v(d, 0.0), params(p) {}

  std::vector<double> m;
  std::vector<double> v;
  AdamParams params;
  std::int64_t step = 0;
};

// Raw steps: w <- w - lr * (preconditioned g). None of them applies
// momentum, projection or schedules; see Optimizer for that. Divisions use
// 0/0 = 0 and there is no epsilon in the SM3 / Adagrad denominators.
// Errors: kShapeMismatch, kNonFiniteGradient.
StepDiagnostics sm3_i_step(Sm3IState& state, ParamTensor& w,
                           const ParamTensor& g, double lr);

// `order`, when nonempty, is a permutation of {0..d-1} giving the order in
// which the generic path visits parameters. The result does not depend on
// it.
StepDiagnostics sm3_ii_step(Sm3IIState& state, ParamTensor& w,
                            const ParamTensor& g, double lr,
                            std::span<const std::size_t> order = {});

StepDiagnostics adagrad_step(AdagradState& state, ParamTensor& w,
                             const ParamTensor& g, double lr);

// m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
// w -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
StepDiagnostics adam_step(AdamState& state, ParamTensor& w,
                          const ParamTensor& g, double lr);

// Slice-wise max / min kernels for axis covers. sm3_i_step and sm3_ii_step
// dispatch here when the state holds an AxisCover. Throws kInvalidConfig if
// it does not.
StepDiagnostics axis_fastpath_step(Sm3IState& state, ParamTensor& w,
                                   const ParamTensor& g, double lr);
StepDiagnostics axis_fastpath_step(Sm3IIState& state, ParamTensor& w,
                                   const ParamTensor& g, double lr);

// Heavy-ball on the preconditioned update: buffer = beta1 * buffer + update,
// and `update` is overwritten with the new buffer.
void apply_momentum(std::span<double> buffer, std::span<double> update,
                    double beta1);

// Clamp every coordinate to [-radius, radius].
void project_linf(std::span<double> w, double radius);
ParamTensor project_linf(const ParamTensor& w, double radius);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::kSm3I;
  double learning_rate = 0.1;
  double momentum = 0.0;  // 0 disables the momentum buffer
  ScheduleSpec schedule;
  std::optional<double> projection_radius;
  AdamParams adam;
};

// Throws kInvalidConfig (message names the offending field) or
// kInvalidSchedule.
void validate_config(const OptimizerConfig& config);

using OptimizerState =
    std::variant<Sm3IState, Sm3IIState, AdagradState, AdamState>;

// Config-driven optimizer over a single parameter tensor: scheduled learning
// rate, raw algorithm step, optional momentum and optional projection.
class Optimizer {
 public:
  // `cover` is required for SM3 and ignored otherwise; a cover whose
  // dimension differs from shape.size() is rejected.
  Optimizer(OptimizerConfig config, const Shape& shape,
            std::optional<Cover> cover = std::nullopt);

  StepDiagnostics step(ParamTensor& w, const ParamTensor& g);

  const OptimizerConfig& config() const { return config_; }
  const OptimizerState& state() const { return state_; }
  OptimizerState& mutable_state() { return state_; }
  const std::vector<double>& momentum_buffer() const { return momentum_; }
  std::int64_t step_count() const { return step_count_; }
  double last_multiplier() const { return last_multiplier_; }
  const Shape& shape() const { return shape_; }

  // JSON with the algorithm tag, step count and every accumulator vector.
  // Doubles are written in shortest round-trip decimal form.
  std::string checkpoint_json() const;
  // Throws kParse / kInconsistentDimensions on a malformed or mismatched
  // checkpoint.
  void restore_checkpoint(const std::string& text);

 private:
  OptimizerConfig config_;
  Shape shape_;
  OptimizerState state_;
  std::vector<double> momentum_;
  std::int64_t step_count_ = 0;
  double last_multiplier_ = 0.0;
};

}  // namespace sm3

#endif  // SM3_OPTIMIZER_H_

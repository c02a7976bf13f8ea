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

#include "sm3/optimizer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sm3/error.h"

namespace sm3 {

namespace {

constexpr std::string_view kCheckpointFormat = "sm3-optimizer-checkpoint";
constexpr int kCheckpointVersion = 1;

void check_step_inputs(const ParamTensor& w, const ParamTensor& g,
                       std::size_t d) {
  if (!(w.shape() == g.shape())) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("parameter shape {} vs gradient shape {}",
                            w.shape().to_string(), g.shape().to_string()));
  }
  if (w.size() != d) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("optimizer state covers {} parameters, got {}", d,
                            w.size()));
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw Error(ErrorCode::kNonFiniteGradient,
                  fmt::format("gradient entry {} is not finite", i), i);
    }
  }
}

// lr * g / sqrt(nu) with 0/0 = 0. nu == 0 can only pair with g^2 == 0
// (every accumulator dominates g^2), so the zero branch covers exactly the
// 0/0 case up to underflow of g^2.
inline double scaled_step(double g, double nu, double lr) {
  return nu > 0.0 ? lr * (g / std::sqrt(nu)) : 0.0;
}

inline double effective_rate(double nu, double lr) {
  return nu > 0.0 ? lr / std::sqrt(nu) : 0.0;
}

StepDiagnostics make_diagnostics(std::size_t d) {
  StepDiagnostics diag;
  diag.nu.assign(d, 0.0);
  diag.effective_lr.assign(d, 0.0);
  return diag;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void finish_from_nu(const ParamTensor& g, double lr, StepDiagnostics& diag,
                    std::span<double> update) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    update[i] = scaled_step(g[i], diag.nu[i], lr);
    diag.effective_lr[i] = effective_rate(diag.nu[i], lr);
  }
}

// -- SM3-I ------------------------------------------------------------------

void sm3_i_generic(Sm3IState& state, const GenericCover& cover,
                   const ParamTensor& g, double lr, StepDiagnostics& diag,
                   std::span<double> update) {
  for (std::size_t r = 0; r < cover.k(); ++r) {
    double m = 0.0;
    for (std::size_t j : cover.set(r)) m = std::max(m, g[j] * g[j]);
    state.mu[r] += m;
  }
  for (std::size_t i = 0; i < cover.d(); ++i) {
    double nu = std::numeric_limits<double>::infinity();
    for (std::size_t r : cover.memberships(i)) nu = std::min(nu, state.mu[r]);
    diag.nu[i] = nu;
  }
  finish_from_nu(g, lr, diag, update);
}

void sm3_i_axis(Sm3IState& state, const AxisCover& cover,
                const ParamTensor& g, double lr, StepDiagnostics& diag,
                std::span<double> update) {
  const Shape& shape = cover.shape();
  const auto& axes = cover.active_axes();
  std::vector<double> g2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i] * g[i];
  std::vector<double> slice_max;
  std::vector<std::span<const double>> blocks;
  blocks.reserve(axes.size());
  for (std::size_t j = 0; j < axes.size(); ++j) {
    const std::size_t n = shape.dim(axes[j]);
    slice_max.resize(n);
    slice_reduce_into(g2, shape, axes[j], ReduceOp::kMax, slice_max);
    std::span<double> mu(state.mu.data() + cover.block_offset(j), n);
    for (std::size_t c = 0; c < n; ++c) mu[c] += slice_max[c];
    blocks.emplace_back(mu.data(), n);
  }
  broadcast_min_into(blocks, axes, shape, diag.nu);
  finish_from_nu(g, lr, diag, update);
}

void sm3_i_update(Sm3IState& state, const ParamTensor& g, double lr,
                  StepDiagnostics& diag, std::span<double> update) {
  if (const auto* axis = std::get_if<AxisCover>(&state.cover)) {
    sm3_i_axis(state, *axis, g, lr, diag, update);
  } else {
    sm3_i_generic(state, std::get<GenericCover>(state.cover), g, lr, diag,
                  update);
  }
  ++state.step;
}

// -- SM3-II -----------------------------------------------------------------

void sm3_ii_generic(Sm3IIState& state, const GenericCover& cover,
                    const ParamTensor& g, double lr, StepDiagnostics& diag,
                    std::span<double> update,
                    std::span<const std::size_t> order) {
  const std::size_t d = cover.d();
  if (!order.empty()) {
    if (order.size() != d) {
      throw Error(ErrorCode::kLengthMismatch,
                  fmt::format("visit order has {} entries for d = {}",
                              order.size(), d));
    }
    std::vector<bool> seen(d, false);
    for (std::size_t i : order) {
      if (i >= d || seen[i]) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "visit order is not a permutation", i);
      }
      seen[i] = true;
    }
  }
  std::fill(state.scratch.begin(), state.scratch.end(), 0.0);
  for (std::size_t pos = 0; pos < d; ++pos) {
    const std::size_t i = order.empty() ? pos : order[pos];
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t r : cover.memberships(i)) {
      prev = std::min(prev, state.mu_prime[r]);
    }
    const double nu = prev + g[i] * g[i];
    diag.nu[i] = nu;
    update[i] = scaled_step(g[i], nu, lr);
    diag.effective_lr[i] = effective_rate(nu, lr);
    for (std::size_t r : cover.memberships(i)) {
      state.scratch[r] = std::max(state.scratch[r], nu);
    }
  }
  std::swap(state.mu_prime, state.scratch);
}

void sm3_ii_axis(Sm3IIState& state, const AxisCover& cover,
                 const ParamTensor& g, double lr, StepDiagnostics& diag,
                 std::span<double> update) {
  const Shape& shape = cover.shape();
  const auto& axes = cover.active_axes();
  std::vector<std::span<const double>> blocks;
  blocks.reserve(axes.size());
  for (std::size_t j = 0; j < axes.size(); ++j) {
    blocks.emplace_back(state.mu_prime.data() + cover.block_offset(j),
                        shape.dim(axes[j]));
  }
  broadcast_min_into(blocks, axes, shape, diag.nu);
  for (std::size_t i = 0; i < g.size(); ++i) diag.nu[i] += g[i] * g[i];
  for (std::size_t j = 0; j < axes.size(); ++j) {
    std::span<double> next(state.scratch.data() + cover.block_offset(j),
                           shape.dim(axes[j]));
    slice_reduce_into(diag.nu, shape, axes[j], ReduceOp::kMax, next);
  }
  std::swap(state.mu_prime, state.scratch);
  finish_from_nu(g, lr, diag, update);
}

void sm3_ii_update(Sm3IIState& state, const ParamTensor& g, double lr,
                   StepDiagnostics& diag, std::span<double> update,
                   std::span<const std::size_t> order) {
  if (const auto* axis = std::get_if<AxisCover>(&state.cover)) {
    sm3_ii_axis(state, *axis, g, lr, diag, update);
  } else {
    sm3_ii_generic(state, std::get<GenericCover>(state.cover), g, lr, diag,
                   update, order);
  }
  ++state.step;
}

// -- Baselines --------------------------------------------------------------

void adagrad_update(AdagradState& state, const ParamTensor& g, double lr,
                    StepDiagnostics& diag, std::span<double> update) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.gamma[i] += g[i] * g[i];
    diag.nu[i] = state.gamma[i];
  }
  finish_from_nu(g, lr, diag, update);
  ++state.step;
}

void adam_update(AdamState& state, const ParamTensor& g, double lr,
                 StepDiagnostics& diag, std::span<double> update) {
  const auto& p = state.params;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(p.beta1, t);
  const double c2 = 1.0 - std::pow(p.beta2, t);
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.m[i] = p.beta1 * state.m[i] + (1.0 - p.beta1) * g[i];
    state.v[i] = p.beta2 * state.v[i] + (1.0 - p.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    const double denom = std::sqrt(v_hat) + p.epsilon;
    diag.nu[i] = v_hat;
    update[i] = denom > 0.0 ? lr * m_hat / denom : 0.0;
    diag.effective_lr[i] = denom > 0.0 ? lr / denom : 0.0;
  }
}

template <typename UpdateFn>
StepDiagnostics raw_step(ParamTensor& w, const ParamTensor& g, std::size_t d,
                         UpdateFn&& fn) {
  check_step_inputs(w, g, d);
  StepDiagnostics diag = make_diagnostics(d);
  std::vector<double> update(d, 0.0);
  fn(diag, std::span<double>(update));
  for (std::size_t i = 0; i < d; ++i) w[i] -= update[i];
  diag.update_norm = l2_norm(update);
  return diag;
}

}  // namespace

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSm3I: return "sm3_i";
    case Algorithm::kSm3II: return "sm3_ii";
    case Algorithm::kAdagrad: return "adagrad";
    case Algorithm::kAdam: return "adam";
  }
  return "sm3_i";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::kSm3I, Algorithm::kSm3II, Algorithm::kAdagrad,
                 Algorithm::kAdam}) {
    if (algorithm_name(a) == name) return a;
  }
  throw Error(ErrorCode::kInvalidConfig,
              fmt::format("algorithm: unknown value '{}'", name));
}

bool uses_cover(Algorithm algorithm) {
  return algorithm == Algorithm::kSm3I || algorithm == Algorithm::kSm3II;
}

Sm3IState::Sm3IState(Cover c)
    : cover(std::move(c)), mu(cover_size(cover), 0.0) {}

Sm3IIState::Sm3IIState(Cover c)
    : cover(std::move(c)),
      mu_prime(cover_size(cover), 0.0),
      scratch(cover_size(cover), 0.0) {}

StepDiagnostics sm3_i_step(Sm3IState& state, ParamTensor& w,
                           const ParamTensor& g, double lr) {
  return raw_step(w, g, cover_dimension(state.cover),
                  [&](StepDiagnostics& diag, std::span<double> update) {
                    sm3_i_update(state, g, lr, diag, update);
                  });
}

StepDiagnostics sm3_ii_step(Sm3IIState& state, ParamTensor& w,
                            const ParamTensor& g, double lr,
                            std::span<const std::size_t> order) {
  return raw_step(w, g, cover_dimension(state.cover),
                  [&](StepDiagnostics& diag, std::span<double> update) {
                    sm3_ii_update(state, g, lr, diag, update, order);
                  });
}

StepDiagnostics adagrad_step(AdagradState& state, ParamTensor& w,
                             const ParamTensor& g, double lr) {
  return raw_step(w, g, state.gamma.size(),
                  [&](StepDiagnostics& diag, std::span<double> update) {
                    adagrad_update(state, g, lr, diag, update);
                  });
}

StepDiagnostics adam_step(AdamState& state, ParamTensor& w,
                          const ParamTensor& g, double lr) {
  return raw_step(w, g, state.m.size(),
                  [&](StepDiagnostics& diag, std::span<double> update) {
                    adam_update(state, g, lr, diag, update);
                  });
}

StepDiagnostics axis_fastpath_step(Sm3IState& state, ParamTensor& w,
                                   const ParamTensor& g, double lr) {
  const auto* axis = std::get_if<AxisCover>(&state.cover);
  if (axis == nullptr) {
    throw Error(ErrorCode::kInvalidConfig,
                "axis_fastpath_step requires an axis cover");
  }
  if (!(axis->shape() == g.shape())) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("axis cover shape {} vs gradient shape {}",
                            axis->shape().to_string(), g.shape().to_string()));
  }
  return sm3_i_step(state, w, g, lr);
}

StepDiagnostics axis_fastpath_step(Sm3IIState& state, ParamTensor& w,
                                   const ParamTensor& g, double lr) {
  const auto* axis = std::get_if<AxisCover>(&state.cover);
  if (axis == nullptr) {
    throw Error(ErrorCode::kInvalidConfig,
                "axis_fastpath_step requires an axis cover");
  }
  if (!(axis->shape() == g.shape())) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("axis cover shape {} vs gradient shape {}",
                            axis->shape().to_string(), g.shape().to_string()));
  }
  return sm3_ii_step(state, w, g, lr);
}

void apply_momentum(std::span<double> buffer, std::span<double> update,
                    double beta1) {
  if (buffer.size() != update.size()) {
    throw Error(ErrorCode::kLengthMismatch, "momentum buffer size");
  }
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    buffer[i] = beta1 * buffer[i] + update[i];
    update[i] = buffer[i];
  }
}

void project_linf(std::span<double> w, double radius) {
  for (double& x : w) x = std::clamp(x, -radius, radius);
}

ParamTensor project_linf(const ParamTensor& w, double radius) {
  ParamTensor out = w;
  project_linf(out.mutable_values(), radius);
  return out;
}

void validate_config(const OptimizerConfig& config) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidConfig, msg);
  };
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    fail(fmt::format("learning_rate must be a finite value > 0, got {}",
                     config.learning_rate));
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    fail(fmt::format("momentum must lie in [0, 1), got {}", config.momentum));
  }
  if (config.projection_radius &&
      (!(*config.projection_radius > 0.0) ||
       !std::isfinite(*config.projection_radius))) {
    fail(fmt::format("projection_radius must be > 0, got {}",
                     *config.projection_radius));
  }
  if (config.algorithm == Algorithm::kAdam) {
    const auto& a = config.adam;
    if (!(a.beta1 >= 0.0 && a.beta1 < 1.0)) fail("adam.beta1 must lie in [0, 1)");
    if (!(a.beta2 >= 0.0 && a.beta2 < 1.0)) fail("adam.beta2 must lie in [0, 1)");
    if (!(a.epsilon > 0.0)) fail("adam.epsilon must be > 0");
  }
  validate_schedule(config.schedule);
}

namespace {

OptimizerState make_state(const OptimizerConfig& config, const Shape& shape,
                          std::optional<Cover> cover) {
  const std::size_t d = shape.size();
  if (uses_cover(config.algorithm)) {
    if (!cover) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("cover: required for {}",
                              algorithm_name(config.algorithm)));
    }
    if (cover_dimension(*cover) != d) {
      throw Error(ErrorCode::kInconsistentDimensions,
                  fmt::format("cover: covers {} parameters, tensor has {}",
                              cover_dimension(*cover), d));
    }
    if (const auto* axis = std::get_if<AxisCover>(&*cover);
        axis != nullptr && !(axis->shape() == shape)) {
      throw Error(ErrorCode::kInconsistentDimensions,
                  fmt::format("cover: axis cover shape {} vs tensor shape {}",
                              axis->shape().to_string(), shape.to_string()));
    }
    if (config.algorithm == Algorithm::kSm3I) {
      return Sm3IState(std::move(*cover));
    }
    return Sm3IIState(std::move(*cover));
  }
  if (config.algorithm == Algorithm::kAdagrad) return AdagradState(d);
  return AdamState(d, config.adam);
}

}  // namespace

Optimizer::Optimizer(OptimizerConfig config, const Shape& shape,
                     std::optional<Cover> cover)
    : config_(std::move(config)),
      shape_(shape),
      state_(make_state(config_, shape, std::move(cover))) {
  validate_config(config_);
  if (config_.momentum > 0.0) momentum_.assign(shape_.size(), 0.0);
}

StepDiagnostics Optimizer::step(ParamTensor& w, const ParamTensor& g) {
  if (!(w.shape() == shape_)) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("optimizer built for shape {}, got {}",
                            shape_.to_string(), w.shape().to_string()));
  }
  const std::int64_t t = step_count_ + 1;
  last_multiplier_ =
      schedule_multiplier(config_.schedule, t, config_.learning_rate);
  const double lr = config_.learning_rate * last_multiplier_;

  const std::size_t d = shape_.size();
  check_step_inputs(w, g, d);
  StepDiagnostics diag = make_diagnostics(d);
  std::vector<double> update(d, 0.0);
  std::visit(
      [&](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sm3IState>) {
          sm3_i_update(s, g, lr, diag, update);
        } else if constexpr (std::is_same_v<T, Sm3IIState>) {
          sm3_ii_update(s, g, lr, diag, update, {});
        } else if constexpr (std::is_same_v<T, AdagradState>) {
          adagrad_update(s, g, lr, diag, update);
        } else {
          adam_update(s, g, lr, diag, update);
        }
      },
      state_);
  if (!momentum_.empty()) apply_momentum(momentum_, update, config_.momentum);
  for (std::size_t i = 0; i < d; ++i) w[i] -= update[i];
  if (config_.projection_radius) {
    project_linf(w.mutable_values(), *config_.projection_radius);
  }
  diag.update_norm = l2_norm(update);
  step_count_ = t;
  return diag;
}

std::string Optimizer::checkpoint_json() const {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["algorithm"] = algorithm_name(config_.algorithm);
  j["step"] = step_count_;
  nlohmann::ordered_json acc;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sm3IState>) {
          acc["mu"] = s.mu;
        } else if constexpr (std::is_same_v<T, Sm3IIState>) {
          acc["mu_prime"] = s.mu_prime;
        } else if constexpr (std::is_same_v<T, AdagradState>) {
          acc["gamma"] = s.gamma;
        } else {
          acc["m"] = s.m;
          acc["v"] = s.v;
        }
      },
      state_);
  j["accumulators"] = std::move(acc);
  j["momentum"] = momentum_;
  return j.dump() + "\n";
}

void Optimizer::restore_checkpoint(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("checkpoint: {}", e.what()));
  }
  auto load_vector = [](const nlohmann::json& obj, const char* key,
                        std::size_t expected) {
    if (!obj.contains(key)) {
      throw Error(ErrorCode::kParse,
                  fmt::format("checkpoint: missing accumulator '{}'", key));
    }
    auto v = obj.at(key).get<std::vector<double>>();
    if (v.size() != expected) {
      throw Error(ErrorCode::kInconsistentDimensions,
                  fmt::format("checkpoint: '{}' has {} entries, expected {}",
                              key, v.size(), expected));
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) {
        throw Error(ErrorCode::kParse,
                    fmt::format("checkpoint: '{}'[{}] is not finite", key, i),
                    i);
      }
    }
    return v;
  };
  try {
    if (j.value("format", std::string()) != kCheckpointFormat ||
        j.value("version", 0) != kCheckpointVersion) {
      throw Error(ErrorCode::kParse, "checkpoint: unrecognized format/version");
    }
    const auto algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    if (algorithm != config_.algorithm) {
      throw Error(ErrorCode::kInconsistentDimensions,
                  fmt::format("checkpoint: algorithm {} but optimizer is {}",
                              algorithm_name(algorithm),
                              algorithm_name(config_.algorithm)));
    }
    const auto step = j.at("step").get<std::int64_t>();
    if (step < 0) throw Error(ErrorCode::kParse, "checkpoint: negative step");
    const auto& acc = j.at("accumulators");
    OptimizerState next = state_;
    std::visit(
        [&](auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Sm3IState>) {
            s.mu = load_vector(acc, "mu", s.mu.size());
          } else if constexpr (std::is_same_v<T, Sm3IIState>) {
            s.mu_prime = load_vector(acc, "mu_prime", s.mu_prime.size());
            std::fill(s.scratch.begin(), s.scratch.end(), 0.0);
          } else if constexpr (std::is_same_v<T, AdagradState>) {
            s.gamma = load_vector(acc, "gamma", s.gamma.size());
          } else {
            s.m = load_vector(acc, "m", s.m.size());
            s.v = load_vector(acc, "v", s.v.size());
          }
          s.step = step;
        },
        next);
    auto momentum = load_vector(j, "momentum", momentum_.size());
    state_ = std::move(next);
    momentum_ = std::move(momentum);
    step_count_ = step;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("checkpoint: {}", e.what()));
  }
}

}  // namespace sm3

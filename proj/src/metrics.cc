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

#include "sm3/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sm3/error.h"

namespace sm3 {

namespace {

constexpr std::string_view kTrackerFormat = "sm3-tracker-checkpoint";

bool leq(double a, double b, double rel_tol) {
  return a <= b + rel_tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

std::string format_double(double x) { return fmt::format("{}", x); }

std::vector<double> regret(std::span<const double> losses_alg,
                           std::span<const double> losses_star) {
  if (losses_alg.size() != losses_star.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("regret: {} algorithm losses vs {} comparator "
                            "losses",
                            losses_alg.size(), losses_star.size()));
  }
  std::vector<double> out(losses_alg.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    acc += losses_alg[t] - losses_star[t];
    out[t] = acc;
  }
  return out;
}

RegretBound::RegretBound(const Cover& cover)
    : cover_(to_generic(cover)), set_sums_(cover_.k(), 0.0) {}

void RegretBound::add(std::span<const double> g) {
  if (g.size() != cover_.d()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("regret bound: gradient of size {} for d = {}",
                            g.size(), cover_.d()));
  }
  for (std::size_t r = 0; r < cover_.k(); ++r) {
    double m = 0.0;
    for (std::size_t j : cover_.set(r)) m = std::max(m, g[j] * g[j]);
    set_sums_[r] += m;
  }
  ++steps_;
}

double RegretBound::rhs(double diameter) const {
  double total = 0.0;
  for (std::size_t i = 0; i < cover_.d(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r : cover_.memberships(i)) {
      best = std::min(best, set_sums_[r]);
    }
    total += std::sqrt(best);
  }
  return 2.0 * diameter * total;
}

double regret_bound_rhs(double diameter, std::span<const ParamTensor> stream,
                        const Cover& cover) {
  if (!(diameter > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "regret bound needs D > 0");
  }
  RegretBound bound(cover);
  for (const auto& g : stream) bound.add(g.values());
  return bound.rhs(diameter);
}

std::vector<DumpRow> accumulator_dump(std::span<const double> gamma,
                                      std::span<const double> nu_prime,
                                      std::span<const double> nu,
                                      std::size_t top_n) {
  if (gamma.size() != nu_prime.size() || gamma.size() != nu.size()) {
    throw Error(ErrorCode::kInconsistentDimensions,
                fmt::format("accumulator dump: sizes {}, {}, {}", gamma.size(),
                            nu_prime.size(), nu.size()));
  }
  std::vector<std::size_t> order(gamma.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(top_n, order.size());
  std::partial_sort(order.begin(), order.begin() + n, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (gamma[a] != gamma[b]) return gamma[a] > gamma[b];
                      return a < b;
                    });
  std::vector<DumpRow> rows;
  rows.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    rows.push_back(DumpRow{i, gamma[i], nu_prime[i], nu[i]});
  }
  return rows;
}

std::string dump_to_csv(std::span<const DumpRow> rows) {
  std::string out = "param_index,adagrad,sm3_ii,sm3_i\n";
  for (const auto& row : rows) {
    out += fmt::format("{},{},{},{}\n", row.param_index,
                       format_double(row.adagrad), format_double(row.sm3_ii),
                       format_double(row.sm3_i));
  }
  return out;
}

// -- Tracker ------------------------------------------------------------------

AccumulatorTracker::AccumulatorTracker(Cover cover)
    : d_(cover_dimension(cover)),
      sm3_i_(cover),
      sm3_ii_(std::move(cover)),
      adagrad_(d_),
      gamma_(d_, 0.0),
      nu_(d_, 0.0),
      nu_prime_(d_, 0.0) {}

void AccumulatorTracker::observe(const ParamTensor& g) {
  ParamTensor scratch(g.shape());
  nu_ = sm3_i_step(sm3_i_, scratch, g, 0.0).nu;
  nu_prime_ = sm3_ii_step(sm3_ii_, scratch, g, 0.0).nu;
  gamma_ = adagrad_step(adagrad_, scratch, g, 0.0).nu;
  ++step_;
}

std::string AccumulatorTracker::checkpoint_json() const {
  nlohmann::ordered_json j;
  j["format"] = kTrackerFormat;
  j["version"] = 1;
  j["step"] = step_;
  j["gamma"] = gamma_;
  j["mu"] = sm3_i_.mu;
  j["mu_prime"] = sm3_ii_.mu_prime;
  j["nu"] = nu_;
  j["nu_prime"] = nu_prime_;
  return j.dump() + "\n";
}

void AccumulatorTracker::restore_checkpoint(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", std::string()) != kTrackerFormat) {
      throw Error(ErrorCode::kParse, "tracker checkpoint: unknown format");
    }
    auto load = [&](const char* key, std::size_t n) {
      auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != n) {
        throw Error(ErrorCode::kInconsistentDimensions,
                    fmt::format("tracker checkpoint: '{}' has {} entries, "
                                "expected {}",
                                key, v.size(), n));
      }
      return v;
    };
    const std::size_t k = sm3_i_.mu.size();
    auto gamma = load("gamma", d_);
    auto mu = load("mu", k);
    auto mu_prime = load("mu_prime", k);
    auto nu = load("nu", d_);
    auto nu_prime = load("nu_prime", d_);
    const auto step = j.at("step").get<std::int64_t>();
    adagrad_.gamma = gamma;
    adagrad_.step = step;
    gamma_ = std::move(gamma);
    sm3_i_.mu = std::move(mu);
    sm3_i_.step = step;
    sm3_ii_.mu_prime = std::move(mu_prime);
    sm3_ii_.step = step;
    nu_ = std::move(nu);
    nu_prime_ = std::move(nu_prime);
    step_ = step;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse,
                fmt::format("tracker checkpoint: {}", e.what()));
  }
}

std::optional<InvariantViolation> check_accumulator_invariants(
    std::span<const double> nu_prev, std::span<const double> nu_prime_prev,
    std::span<const double> gamma, std::span<const double> nu_prime,
    std::span<const double> nu, double rel_tol) {
  const std::size_t d = gamma.size();
  if (nu_prime.size() != d || nu.size() != d ||
      (!nu_prev.empty() && nu_prev.size() != d) ||
      (!nu_prime_prev.empty() && nu_prime_prev.size() != d)) {
    throw Error(ErrorCode::kInconsistentDimensions,
                "invariant check: accumulator sizes differ");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!nu_prev.empty() && !leq(nu_prev[i], nu[i], rel_tol)) {
      return InvariantViolation{
          "monotonicity", i,
          fmt::format("SM3-I nu decreased at parameter {}: {} -> {}", i,
                      nu_prev[i], nu[i])};
    }
    if (!nu_prime_prev.empty() && !leq(nu_prime_prev[i], nu_prime[i], rel_tol)) {
      return InvariantViolation{
          "monotonicity", i,
          fmt::format("SM3-II nu' decreased at parameter {}: {} -> {}", i,
                      nu_prime_prev[i], nu_prime[i])};
    }
    if (!leq(gamma[i], nu_prime[i], rel_tol)) {
      return InvariantViolation{
          "sandwich", i,
          fmt::format("gamma > nu' at parameter {}: {} > {}", i, gamma[i],
                      nu_prime[i])};
    }
    if (!leq(nu_prime[i], nu[i], rel_tol)) {
      return InvariantViolation{
          "sandwich", i,
          fmt::format("nu' > nu at parameter {}: {} > {}", i, nu_prime[i],
                      nu[i])};
    }
  }
  return std::nullopt;
}

std::optional<InvariantViolation> check_tracker_consistency(
    const AccumulatorTracker& tracker, double rel_tol) {
  const GenericCover cover = to_generic(tracker.sm3_i().cover);
  const auto& mu = tracker.sm3_i().mu;
  const auto& mu_prime = tracker.sm3_ii().mu_prime;
  std::vector<double> nu(cover.d());
  for (std::size_t i = 0; i < cover.d(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r : cover.memberships(i)) best = std::min(best, mu[r]);
    nu[i] = best;
  }
  if (auto v = check_accumulator_invariants(tracker.nu(), {}, tracker.gamma(),
                                            tracker.nu_prime(), nu, rel_tol)) {
    return v;
  }
  for (std::size_t i = 0; i < cover.d(); ++i) {
    if (!leq(nu[i], tracker.nu()[i], rel_tol) ||
        !leq(tracker.nu()[i], nu[i], rel_tol)) {
      return InvariantViolation{
          "consistency", i,
          fmt::format("recorded nu({}) = {} but the set accumulators give {}",
                      i, tracker.nu()[i], nu[i])};
    }
  }
  if (tracker.step() == 0) return std::nullopt;
  for (std::size_t r = 0; r < cover.k(); ++r) {
    double m = 0.0;
    for (std::size_t j : cover.set(r)) m = std::max(m, tracker.nu_prime()[j]);
    if (!leq(m, mu_prime[r], rel_tol) || !leq(mu_prime[r], m, rel_tol)) {
      return InvariantViolation{
          "max_maintenance", r,
          fmt::format("mu'({}) = {} but max of nu' over the set is {}", r,
                      mu_prime[r], m)};
    }
  }
  return std::nullopt;
}

// -- Memory ---------------------------------------------------------------------

Cover build_cover(const CoverSpec& spec, const Shape& shape) {
  switch (spec.kind) {
    case CoverKind::kSingleton:
      return singleton_cover(shape.size());
    case CoverKind::kAxes:
      return spec.axes.empty() ? full_axis_cover(shape)
                               : axis_cover(shape, spec.axes);
    case CoverKind::kCustom:
      if (!spec.custom) {
        throw Error(ErrorCode::kInvalidConfig, "cover: custom cover missing");
      }
      if (spec.custom->d() != shape.size()) {
        throw Error(ErrorCode::kInconsistentDimensions,
                    fmt::format("cover: custom cover has d = {}, tensor has {}",
                                spec.custom->d(), shape.size()));
      }
      return *spec.custom;
  }
  return singleton_cover(shape.size());
}

std::size_t cover_slot_count(const CoverSpec& spec, const Shape& shape) {
  switch (spec.kind) {
    case CoverKind::kSingleton:
      return shape.size();
    case CoverKind::kAxes:
      return spec.axes.empty() ? full_axis_cover(shape).k()
                               : axis_cover(shape, spec.axes).k();
    case CoverKind::kCustom:
      return std::get<GenericCover>(build_cover(spec, shape)).k();
  }
  return shape.size();
}

MemoryAccount memory_account(std::span<const Shape> shapes,
                             const OptimizerConfig& config,
                             const CoverSpec& cover) {
  MemoryAccount account;
  for (const auto& shape : shapes) {
    TensorMemory tm;
    tm.shape = shape;
    tm.parameter_slots = shape.size();
    switch (config.algorithm) {
      case Algorithm::kAdagrad:
        tm.accumulator_slots = shape.size();
        break;
      case Algorithm::kAdam:
        tm.accumulator_slots = 2 * shape.size();
        break;
      case Algorithm::kSm3I:
        tm.accumulator_slots = cover_slot_count(cover, shape);
        break;
      case Algorithm::kSm3II:
        tm.accumulator_slots = 2 * cover_slot_count(cover, shape);
        break;
    }
    tm.momentum_slots = config.momentum > 0.0 ? shape.size() : 0;
    account.parameter_slots += tm.parameter_slots;
    account.accumulator_slots += tm.accumulator_slots;
    account.momentum_slots += tm.momentum_slots;
    account.tensors.push_back(std::move(tm));
  }
  return account;
}

std::string run_records_csv(std::span<const RunRecord> records) {
  std::string out = "step,loss,regret,lr_multiplier,update_norm,step_ms\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{}\n", r.step, format_double(r.loss),
                       format_double(r.regret), format_double(r.lr_multiplier),
                       format_double(r.update_norm), format_double(r.step_ms));
  }
  return out;
}

}  // namespace sm3

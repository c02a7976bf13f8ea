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

#include "sm3/schedule.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "sm3/error.h"

namespace sm3 {

std::string_view schedule_kind_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kRsqrtModelDim: return "rsqrt_model_dim";
    case ScheduleKind::kLinearDecay: return "linear_decay";
    case ScheduleKind::kStaircase: return "staircase";
  }
  return "constant";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  for (auto kind : {ScheduleKind::kConstant, ScheduleKind::kRsqrtModelDim,
                    ScheduleKind::kLinearDecay, ScheduleKind::kStaircase}) {
    if (schedule_kind_name(kind) == name) return kind;
  }
  throw Error(ErrorCode::kInvalidSchedule,
              fmt::format("unknown schedule kind '{}'", name));
}

void validate_schedule(const ScheduleSpec& spec) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidSchedule, msg);
  };
  if (spec.warmup_steps < 0) fail("warmup_steps must be >= 0");
  switch (spec.kind) {
    case ScheduleKind::kConstant:
      break;
    case ScheduleKind::kRsqrtModelDim:
      if (!(spec.model_dim > 0.0) || !std::isfinite(spec.model_dim)) {
        fail("rsqrt_model_dim needs model_dim > 0");
      }
      break;
    case ScheduleKind::kLinearDecay:
      if (spec.total_steps < 1) fail("linear_decay needs total_steps >= 1");
      if (spec.warmup_steps > spec.total_steps) {
        fail(fmt::format("warmup_steps {} exceeds total_steps {}",
                         spec.warmup_steps, spec.total_steps));
      }
      break;
    case ScheduleKind::kStaircase:
      if (!(spec.decay > 0.0 && spec.decay < 1.0)) {
        fail("staircase decay must lie in (0, 1)");
      }
      if (spec.interval < 1) fail("staircase interval must be >= 1");
      if (!(spec.floor_lr >= 0.0) || !std::isfinite(spec.floor_lr)) {
        fail("staircase floor_lr must be >= 0");
      }
      break;
  }
}

double schedule_multiplier(const ScheduleSpec& spec, std::int64_t t,
                           double base_lr) {
  if (t < 1) {
    throw Error(ErrorCode::kInvalidSchedule,
                fmt::format("schedule queried at step {} < 1", t));
  }
  validate_schedule(spec);
  const double td = static_cast<double>(t);
  double m = 1.0;
  switch (spec.kind) {
    case ScheduleKind::kConstant:
      break;
    case ScheduleKind::kRsqrtModelDim:
      m = std::sqrt(spec.model_dim / td);
      break;
    case ScheduleKind::kLinearDecay:
      m = std::max(0.0, 1.0 - td / static_cast<double>(spec.total_steps));
      break;
    case ScheduleKind::kStaircase: {
      const auto stairs = t / spec.interval;
      m = std::pow(spec.decay, static_cast<double>(stairs));
      if (base_lr > 0.0) m = std::max(spec.floor_lr / base_lr, m);
      break;
    }
  }
  if (spec.warmup_steps > 0 && t <= spec.warmup_steps) {
    m *= td / static_cast<double>(spec.warmup_steps);
  }
  return m;
}

}  // namespace sm3

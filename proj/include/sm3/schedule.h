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

#ifndef SM3_SCHEDULE_H_
#define SM3_SCHEDULE_H_

#include <cstdint>
#include <string_view>

namespace sm3 {

enum class ScheduleKind { kConstant, kRsqrtModelDim, kLinearDecay, kStaircase };

std::string_view schedule_kind_name(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

// Learning-rate multiplier applied on top of the base rate eta.
//
//   constant          1
//   rsqrt_model_dim   sqrt(model_dim / t)
//   linear_decay      max(0, 1 - t / total_steps)
//   staircase         max(floor_lr / eta, decay ^ floor(t / interval))
//
// During warmup (t <= warmup_steps) the value above is further multiplied by
// the linear ramp t / warmup_steps.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kConstant;
  std::int64_t warmup_steps = 0;
  double model_dim = 1.0;
  std::int64_t total_steps = 0;
  double decay = 0.5;
  std::int64_t interval = 1;
  double floor_lr = 0.0;
};

// Throws kInvalidSchedule when the parameters of `spec.kind` are unusable.
void validate_schedule(const ScheduleSpec& spec);

// `base_lr` is only consulted by the staircase floor. t is 1-based.
double schedule_multiplier(const ScheduleSpec& spec, std::int64_t t,
                           double base_lr = 1.0);

}  // namespace sm3

#endif  // SM3_SCHEDULE_H_

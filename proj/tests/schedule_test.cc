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

#include <gtest/gtest.h>

#include <cmath>

#include "sm3/error.h"

namespace sm3 {
namespace {

TEST(ScheduleTest, RsqrtModelDim) {
  ScheduleSpec s{.kind = ScheduleKind::kRsqrtModelDim, .model_dim = 4.0};
  EXPECT_EQ(schedule_multiplier(s, 16), 0.5);
  EXPECT_EQ(schedule_multiplier(s, 1), 2.0);
}

TEST(ScheduleTest, LinearDecay) {
  ScheduleSpec s{.kind = ScheduleKind::kLinearDecay, .total_steps = 100};
  EXPECT_EQ(schedule_multiplier(s, 50), 0.5);
  EXPECT_EQ(schedule_multiplier(s, 100), 0.0);
  EXPECT_EQ(schedule_multiplier(s, 150), 0.0);
}

TEST(ScheduleTest, Staircase) {
  ScheduleSpec s{.kind = ScheduleKind::kStaircase,
                 .decay = 0.5,
                 .interval = 10,
                 .floor_lr = 0.0};
  EXPECT_EQ(schedule_multiplier(s, 25), 0.25);
  EXPECT_EQ(schedule_multiplier(s, 9), 1.0);
  EXPECT_EQ(schedule_multiplier(s, 10), 0.5);
  // Floor eta0 / eta = 0.1 / 1.0 wins once the decay drops below it.
  s.floor_lr = 0.1;
  EXPECT_EQ(schedule_multiplier(s, 45, 1.0), 0.1);
  EXPECT_EQ(schedule_multiplier(s, 15, 1.0), 0.5);
}

TEST(ScheduleTest, WarmupRampIsLinearAndMultiplicative) {
  ScheduleSpec s{.kind = ScheduleKind::kConstant, .warmup_steps = 10};
  EXPECT_EQ(schedule_multiplier(s, 5), 0.5);
  EXPECT_EQ(schedule_multiplier(s, 10), 1.0);
  EXPECT_EQ(schedule_multiplier(s, 11), 1.0);
  ScheduleSpec r{.kind = ScheduleKind::kRsqrtModelDim,
                 .warmup_steps = 8,
                 .model_dim = 16.0};
  EXPECT_DOUBLE_EQ(schedule_multiplier(r, 4), std::sqrt(16.0 / 4.0) * 0.5);
}

TEST(ScheduleTest, InvalidSpecs) {
  auto code = [](const ScheduleSpec& s) {
    try {
      schedule_multiplier(s, 1);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kParse;
  };
  EXPECT_EQ(code({.kind = ScheduleKind::kLinearDecay,
                  .warmup_steps = 20,
                  .total_steps = 10}),
            ErrorCode::kInvalidSchedule);
  EXPECT_EQ(code({.kind = ScheduleKind::kRsqrtModelDim, .model_dim = 0.0}),
            ErrorCode::kInvalidSchedule);
  EXPECT_EQ(code({.kind = ScheduleKind::kStaircase, .decay = 1.5}),
            ErrorCode::kInvalidSchedule);
  EXPECT_THROW(schedule_multiplier(ScheduleSpec{}, 0), Error);
  EXPECT_THROW(parse_schedule_kind("cosine"), Error);
}

TEST(ScheduleTest, MultiplierFiniteAndPositiveBeforeHorizon) {
  const ScheduleSpec specs[] = {
      {.kind = ScheduleKind::kConstant, .warmup_steps = 7},
      {.kind = ScheduleKind::kRsqrtModelDim, .warmup_steps = 3, .model_dim = 512},
      {.kind = ScheduleKind::kLinearDecay, .warmup_steps = 5, .total_steps = 1000},
      {.kind = ScheduleKind::kStaircase, .decay = 0.9, .interval = 7, .floor_lr = 1e-3},
  };
  for (const auto& s : specs) {
    for (std::int64_t t = 1; t < 1000; ++t) {
      const double m = schedule_multiplier(s, t, 1.0);
      EXPECT_TRUE(std::isfinite(m));
      EXPECT_GT(m, 0.0);
    }
  }
}

}  // namespace
}  // namespace sm3

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.h"
#include "sm3/error.h"

namespace sm3 {
namespace {

using testing::Vec;

const std::vector<IndexSet> kTraceSets = {{0, 1}, {1, 2}};

ParamTensor vec3(double a, double b, double c) {
  return ParamTensor(Shape{3}, {a, b, c});
}

ParamTensor as_tensor(const Vec& v) {
  return ParamTensor(Shape{v.size()}, v);
}

// Two-step trace on d = 3 with S_1 = {1, 2}, S_2 = {2, 3} (0-based {0,1},
// {1,2}), eta = 1, g_1 = (3, 1, 2), g_2 = (0, 2, 1):
//   SM3-I : mu_1 = (9, 4), nu_1 = (9, 4, 4), w_2 = (-1, -1/2, -1)
//           mu_2 = (13, 8), nu_2 = (13, 8, 8)
//   SM3-II: nu'_1 = (9, 1, 4), mu'_1 = (9, 4), w_2 = (-1, -1, -1)
//           nu'_2 = (9, 8, 5)
//   Adagrad gamma_2 = (9, 5, 5)
TEST(HandTraceTest, Sm3I) {
  Sm3IState state(GenericCover(3, kTraceSets));
  ParamTensor w(Shape{3});
  auto d1 = sm3_i_step(state, w, vec3(3, 1, 2), 1.0);
  EXPECT_EQ(state.mu, (Vec{9, 4}));
  EXPECT_EQ(d1.nu, (Vec{9, 4, 4}));
  EXPECT_EQ(w.data(), (Vec{-1, -0.5, -1}));
  auto d2 = sm3_i_step(state, w, vec3(0, 2, 1), 1.0);
  EXPECT_EQ(state.mu, (Vec{13, 8}));
  EXPECT_EQ(d2.nu, (Vec{13, 8, 8}));
}

TEST(HandTraceTest, Sm3II) {
  Sm3IIState state(GenericCover(3, kTraceSets));
  ParamTensor w(Shape{3});
  auto d1 = sm3_ii_step(state, w, vec3(3, 1, 2), 1.0);
  EXPECT_EQ(d1.nu, (Vec{9, 1, 4}));
  EXPECT_EQ(state.mu_prime, (Vec{9, 4}));
  EXPECT_EQ(w.data(), (Vec{-1, -1, -1}));
  auto d2 = sm3_ii_step(state, w, vec3(0, 2, 1), 1.0);
  EXPECT_EQ(d2.nu, (Vec{9, 8, 5}));
}

TEST(HandTraceTest, AgreesWithLiteralPseudocode) {
  const std::vector<Vec> stream = {{3, 1, 2}, {0, 2, 1}};
  const auto one = testing::reference_sm3_i(3, kTraceSets, stream, 1.0);
  const auto two = testing::reference_sm3_ii(3, kTraceSets, stream, 1.0);
  const auto gamma = testing::reference_gamma(stream);
  EXPECT_EQ(one.accumulators, (Vec{13, 8}));
  EXPECT_EQ(one.nu[1], (Vec{13, 8, 8}));
  EXPECT_EQ(two.nu[1], (Vec{9, 8, 5}));
  EXPECT_EQ(gamma[1], (Vec{9, 5, 5}));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LE(gamma[1][i], two.nu[1][i]);
    EXPECT_LE(two.nu[1][i], one.nu[1][i]);
  }
}

TEST(ZeroOverZeroTest, ZeroGradientLeavesIterateUnchanged) {
  const ParamTensor zero(Shape{3});
  ParamTensor w = vec3(0.5, -2, 3);
  const ParamTensor before = w;
  Sm3IState s1(GenericCover(3, kTraceSets));
  auto diag = sm3_i_step(s1, w, zero, 1.0);
  EXPECT_EQ(w, before);
  EXPECT_EQ(diag.effective_lr, (Vec{0, 0, 0}));
  Sm3IIState s2(GenericCover(3, kTraceSets));
  sm3_ii_step(s2, w, zero, 1.0);
  EXPECT_EQ(w, before);
  AdagradState s3(3);
  adagrad_step(s3, w, zero, 1.0);
  EXPECT_EQ(w, before);
}

TEST(ZeroOverZeroTest, PartiallyZeroGradient) {
  // Parameter 2 stays at nu = 0 while the others move.
  Sm3IState state(singleton_cover(3));
  ParamTensor w(Shape{3});
  auto diag = sm3_i_step(state, w, vec3(2, -1, 0), 0.5);
  EXPECT_EQ(w.data(), (Vec{-0.5, 0.5, 0}));
  EXPECT_EQ(diag.nu[2], 0.0);
  EXPECT_EQ(diag.effective_lr[2], 0.0);
  EXPECT_GT(diag.effective_lr[0], 0.0);
}

TEST(AdagradTest, OneStep) {
  AdagradState state(2);
  ParamTensor w(Shape{2});
  adagrad_step(state, w, ParamTensor(Shape{2}, {3, 4}), 1.0);
  EXPECT_EQ(state.gamma, (Vec{9, 16}));
  EXPECT_EQ(w.data(), (Vec{-1, -1}));
}

TEST(AdamTest, FirstStepClosedForm) {
  AdamState state(1, AdamParams{0.9, 0.999, 1e-8});
  ParamTensor w(Shape{1});
  const double lr = 0.01;
  adam_step(state, w, ParamTensor(Shape{1}, {1.0}), lr);
  EXPECT_NEAR(state.m[0], 0.1, 1e-15);
  EXPECT_NEAR(state.v[0], 0.001, 1e-15);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(w[0], -lr / (1.0 + 1e-8), 1e-15);
  EXPECT_LT(w[0], -lr * 0.9999999);
}

TEST(AdamTest, ZeroStreamAndDeterminism) {
  AdamState a(4, {}), b(4, {});
  ParamTensor wa(Shape{4}, {1, 2, 3, 4}), wb = wa;
  for (int t = 0; t < 10; ++t) {
    adam_step(a, wa, ParamTensor(Shape{4}), 0.1);
    adam_step(b, wb, ParamTensor(Shape{4}), 0.1);
  }
  EXPECT_EQ(wa.data(), (Vec{1, 2, 3, 4}));
  SplitMix64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto g = testing::random_tensor(rng, Shape{4});
    adam_step(a, wa, g, 0.1);
    adam_step(b, wb, g, 0.1);
  }
  EXPECT_EQ(wa, wb);
  EXPECT_EQ(a.m, b.m);
  EXPECT_EQ(a.v, b.v);
}

TEST(StepErrorsTest, RejectsNonFiniteAndMismatchedGradients) {
  Sm3IState state(singleton_cover(2));
  ParamTensor w(Shape{2});
  // ParamTensor itself refuses NaN, so poke one in through the span.
  ParamTensor g(Shape{2});
  g.mutable_values()[1] = std::nan("");
  try {
    sm3_i_step(state, w, g, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteGradient);
    EXPECT_EQ(e.index(), std::optional<std::size_t>(1));
  }
  try {
    sm3_i_step(state, w, ParamTensor(Shape{3}), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(SingletonReductionTest, Sm3MatchesAdagradBitForBit) {
  SplitMix64 rng(17);
  const std::size_t d = 20;
  Sm3IState one(singleton_cover(d));
  Sm3IIState two(singleton_cover(d));
  AdagradState ada(d);
  ParamTensor w1(Shape{d}), w2(Shape{d}), wa(Shape{d});
  for (int t = 0; t < 1000; ++t) {
    const auto g = testing::random_tensor(rng, Shape{d});
    const auto n1 = sm3_i_step(one, w1, g, 0.3).nu;
    const auto n2 = sm3_ii_step(two, w2, g, 0.3).nu;
    const auto na = adagrad_step(ada, wa, g, 0.3).nu;
    ASSERT_EQ(n1, na);
    ASSERT_EQ(n2, na);
  }
  EXPECT_EQ(w1, wa);
  EXPECT_EQ(w2, wa);
}

TEST(ReferenceOracleTest, GenericPathMatchesLiteralPseudocode) {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 1 + rng.below(25);
    const std::size_t k = 1 + rng.below(8);
    const auto sets = testing::random_cover(rng, d, k);
    const auto stream = testing::random_stream(rng, d, 1 + rng.below(40));
    const double lr = 0.7;
    const auto ref1 = testing::reference_sm3_i(d, sets, stream, lr);
    const auto ref2 = testing::reference_sm3_ii(d, sets, stream, lr);
    Sm3IState s1(GenericCover(d, sets));
    Sm3IIState s2(GenericCover(d, sets));
    ParamTensor w1(Shape{d}), w2(Shape{d});
    for (std::size_t t = 0; t < stream.size(); ++t) {
      const auto g = as_tensor(stream[t]);
      EXPECT_EQ(sm3_i_step(s1, w1, g, lr).nu, ref1.nu[t]);
      EXPECT_EQ(sm3_ii_step(s2, w2, g, lr).nu, ref2.nu[t]);
      for (std::size_t i = 0; i < d; ++i) {
        EXPECT_NEAR(w1[i], ref1.w[t][i], 1e-12);
        EXPECT_NEAR(w2[i], ref2.w[t][i], 1e-12);
      }
    }
    EXPECT_EQ(s1.mu, ref1.accumulators);
    EXPECT_EQ(s2.mu_prime, ref2.accumulators);
  }
}

bool leq(double a, double b) {
  return a <= b + 1e-9 * std::max(std::abs(a), std::abs(b));
}

// Monotonicity of nu and nu', nu >= gamma, and gamma <= nu' <= nu over random
// covers and streams.
TEST(AccumulatorPropertyTest, MonotoneAndSandwiched) {
  SplitMix64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(50);
    const std::size_t k = 1 + rng.below(10);
    const std::size_t steps = 1 + rng.below(200);
    const GenericCover cover(d, testing::random_cover(rng, d, k));
    Sm3IState one(cover);
    Sm3IIState two(cover);
    AdagradState ada(d);
    ParamTensor w1(Shape{d}), w2(Shape{d}), wa(Shape{d});
    Vec prev1(d, 0.0), prev2(d, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
      const auto g = testing::random_tensor(rng, Shape{d});
      const auto nu = sm3_i_step(one, w1, g, 0.1).nu;
      const auto nup = sm3_ii_step(two, w2, g, 0.1).nu;
      const auto gamma = adagrad_step(ada, wa, g, 0.1).nu;
      for (std::size_t i = 0; i < d; ++i) {
        ASSERT_TRUE(leq(prev1[i], nu[i])) << "trial " << trial << " t " << t;
        ASSERT_TRUE(leq(prev2[i], nup[i]));
        ASSERT_TRUE(leq(gamma[i], nu[i]));
        ASSERT_TRUE(leq(gamma[i], nup[i]));
        ASSERT_TRUE(leq(nup[i], nu[i]));
      }
      prev1 = nu;
      prev2 = nup;
    }
  }
}

TEST(AccumulatorPropertyTest, Sm3IIMaintainsSetMaxima) {
  SplitMix64 rng(7);
  const std::size_t d = 15;
  const GenericCover cover(d, testing::random_cover(rng, d, 4));
  Sm3IIState state(cover);
  ParamTensor w(Shape{d});
  for (int t = 0; t < 30; ++t) {
    const auto nu = sm3_ii_step(state, w, testing::random_tensor(rng, Shape{d}),
                                0.1)
                        .nu;
    for (std::size_t r = 0; r < cover.k(); ++r) {
      double m = 0.0;
      for (std::size_t j : cover.set(r)) m = std::max(m, nu[j]);
      EXPECT_EQ(state.mu_prime[r], m);
    }
  }
}

TEST(AccumulatorPropertyTest, AddingASetNeverIncreasesSm3INu) {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 2 + rng.below(20);
    auto sets = testing::random_cover(rng, d, 1 + rng.below(5));
    auto refined = sets;
    refined.push_back(testing::random_cover(rng, d, 1).front());
    Sm3IState base(GenericCover(d, sets));
    Sm3IState finer(GenericCover(d, refined));
    ParamTensor wb(Shape{d}), wf(Shape{d});
    for (int t = 0; t < 50; ++t) {
      const auto g = testing::random_tensor(rng, Shape{d});
      const auto nb = sm3_i_step(base, wb, g, 0.1).nu;
      const auto nf = sm3_i_step(finer, wf, g, 0.1).nu;
      for (std::size_t i = 0; i < d; ++i) ASSERT_LE(nf[i], nb[i]);
    }
  }
}

TEST(OrderIndependenceTest, PermutedVisitOrderIsBitIdentical) {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng.below(30);
    const GenericCover cover(d, testing::random_cover(rng, d, 1 + rng.below(8)));
    Sm3IIState canonical(cover), permuted(cover);
    ParamTensor wc(Shape{d}), wp(Shape{d});
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int t = 0; t < 25; ++t) {
      for (std::size_t i = d; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      const auto g = testing::random_tensor(rng, Shape{d});
      sm3_ii_step(canonical, wc, g, 0.2);
      sm3_ii_step(permuted, wp, g, 0.2, order);
      ASSERT_EQ(wc, wp);
      ASSERT_EQ(canonical.mu_prime, permuted.mu_prime);
    }
  }
}

TEST(OrderIndependenceTest, RejectsNonPermutation) {
  Sm3IIState state(singleton_cover(3));
  ParamTensor w(Shape{3});
  const std::size_t bad[] = {0, 0, 1};
  EXPECT_THROW(sm3_ii_step(state, w, vec3(1, 1, 1), 1.0, bad), Error);
}

// -- Axis fast path ------------------------------------------------------------

template <typename State>
double fastpath_max_deviation(const Shape& shape,
                              std::vector<std::size_t> axes, int steps,
                              std::uint64_t seed) {
  SplitMix64 rng(seed);
  const AxisCover cover = axis_cover(shape, std::move(axes));
  State fast{Cover(cover)};
  State generic{Cover(expand(cover))};
  ParamTensor wf(shape), wg(shape);
  double worst = 0.0;
  for (int t = 0; t < steps; ++t) {
    const auto g = testing::random_tensor(rng, shape);
    const auto df = axis_fastpath_step(fast, wf, g, 0.3);
    const auto dg = [&] {
      if constexpr (std::is_same_v<State, Sm3IState>) {
        return sm3_i_step(generic, wg, g, 0.3);
      } else {
        return sm3_ii_step(generic, wg, g, 0.3);
      }
    }();
    for (std::size_t i = 0; i < shape.size(); ++i) {
      worst = std::max(worst, std::abs(wf[i] - wg[i]));
      worst = std::max(worst, std::abs(df.nu[i] - dg.nu[i]));
    }
  }
  return worst;
}

TEST(AxisFastPathTest, TwoByTwoOneStep) {
  EXPECT_LE(fastpath_max_deviation<Sm3IState>(Shape{2, 2}, {0, 1}, 1, 1), 1e-12);
  EXPECT_LE(fastpath_max_deviation<Sm3IIState>(Shape{2, 2}, {0, 1}, 1, 1), 1e-12);
}

TEST(AxisFastPathTest, OneByN) {
  EXPECT_LE(fastpath_max_deviation<Sm3IState>(Shape{1, 7}, {0, 1}, 10, 2), 1e-12);
  EXPECT_LE(fastpath_max_deviation<Sm3IIState>(Shape{1, 7}, {0, 1}, 10, 2), 1e-12);
}

TEST(AxisFastPathTest, RankThreeFiveSteps) {
  EXPECT_LE(fastpath_max_deviation<Sm3IState>(Shape{3, 2, 2}, {0, 1, 2}, 5, 3),
            1e-12);
  EXPECT_LE(fastpath_max_deviation<Sm3IIState>(Shape{3, 2, 2}, {0, 1, 2}, 5, 3),
            1e-12);
}

TEST(AxisFastPathTest, PartialAxes) {
  EXPECT_LE(fastpath_max_deviation<Sm3IState>(Shape{3, 4, 2}, {2}, 8, 4), 1e-12);
  EXPECT_LE(fastpath_max_deviation<Sm3IIState>(Shape{3, 4, 2}, {0, 2}, 8, 4),
            1e-12);
}

TEST(AxisFastPathTest, RequiresAxisCover) {
  Sm3IState state(singleton_cover(4));
  ParamTensor w(Shape{2, 2});
  EXPECT_THROW(axis_fastpath_step(state, w, ParamTensor(Shape{2, 2}), 1.0),
               Error);
}

// -- Momentum and projection ---------------------------------------------------

TEST(MomentumTest, DisabledIsIdentity) {
  Vec buffer = {0, 0}, update = {1.5, -2};
  apply_momentum(buffer, update, 0.0);
  EXPECT_EQ(update, (Vec{1.5, -2}));
}

TEST(MomentumTest, GeometricRecurrence) {
  Vec buffer = {0.0};
  Vec u = {1.0};
  apply_momentum(buffer, u, 0.9);
  EXPECT_EQ(u[0], 1.0);
  u = {1.0};
  apply_momentum(buffer, u, 0.9);
  EXPECT_DOUBLE_EQ(u[0], 1.9);
  for (int t = 0; t < 2000; ++t) {
    u = {1.0};
    apply_momentum(buffer, u, 0.9);
  }
  EXPECT_NEAR(u[0], 1.0 / (1.0 - 0.9), 1e-9);
}

TEST(ProjectionTest, ClampsToBall) {
  EXPECT_EQ(project_linf(ParamTensor(Shape{2}, {2, -0.5}), 1.0).data(),
            (Vec{1, -0.5}));
  EXPECT_EQ(project_linf(ParamTensor(Shape{2}, {0.3, -0.2}), 1.0).data(),
            (Vec{0.3, -0.2}));
  EXPECT_EQ(project_linf(ParamTensor(Shape{1}, {-5}), 0.1).data(), (Vec{-0.1}));
}

// -- Optimizer wrapper ---------------------------------------------------------

TEST(OptimizerTest, MomentumDisabledMatchesRawStepBitForBit) {
  SplitMix64 rng(9);
  const Shape shape{4, 3};
  OptimizerConfig config{.algorithm = Algorithm::kSm3II, .learning_rate = 0.25};
  Optimizer opt(config, shape, Cover(full_axis_cover(shape)));
  Sm3IIState raw(Cover(full_axis_cover(shape)));
  ParamTensor w1(shape), w2(shape);
  for (int t = 0; t < 100; ++t) {
    const auto g = testing::random_tensor(rng, shape);
    opt.step(w1, g);
    sm3_ii_step(raw, w2, g, 0.25);
  }
  EXPECT_EQ(w1, w2);
  EXPECT_TRUE(opt.momentum_buffer().empty());
}

TEST(OptimizerTest, MomentumAppliesToPreconditionedUpdate) {
  // Adagrad, g = (1) every step: raw updates are lr / sqrt(t).
  OptimizerConfig config{.algorithm = Algorithm::kAdagrad,
                         .learning_rate = 1.0,
                         .momentum = 0.5};
  Optimizer opt(config, Shape{1});
  ParamTensor w(Shape{1});
  const ParamTensor g(Shape{1}, {1.0});
  opt.step(w, g);
  EXPECT_DOUBLE_EQ(w[0], -1.0);
  opt.step(w, g);
  EXPECT_DOUBLE_EQ(w[0], -1.0 - (0.5 + 1.0 / std::sqrt(2.0)));
}

TEST(OptimizerTest, ScheduleAndProjection) {
  OptimizerConfig config{.algorithm = Algorithm::kAdagrad,
                         .learning_rate = 10.0,
                         .schedule = {.kind = ScheduleKind::kConstant,
                                      .warmup_steps = 4},
                         .projection_radius = 1.5};
  Optimizer opt(config, Shape{2});
  ParamTensor w(Shape{2});
  opt.step(w, ParamTensor(Shape{2}, {1.0, -1.0}));
  EXPECT_EQ(opt.last_multiplier(), 0.25);
  EXPECT_EQ(w.data(), (Vec{-1.5, 1.5}));  // 2.5 clamped
}

TEST(OptimizerTest, ConfigValidation) {
  auto message = [](OptimizerConfig c) -> std::string {
    try {
      Optimizer(c, Shape{2}, Cover(singleton_cover(2)));
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message({.learning_rate = 0.0}).find("learning_rate"),
            std::string::npos);
  EXPECT_NE(message({.learning_rate = 0.1, .momentum = 1.0}).find("momentum"),
            std::string::npos);
  EXPECT_NE(message({.learning_rate = 0.1, .projection_radius = 0.0})
                .find("projection_radius"),
            std::string::npos);
  EXPECT_THROW(Optimizer({.algorithm = Algorithm::kSm3I}, Shape{2}), Error);
  EXPECT_THROW(Optimizer({.algorithm = Algorithm::kSm3I}, Shape{3},
                         Cover(singleton_cover(2))),
               Error);
}

class CheckpointTest : public ::testing::TestWithParam<Algorithm> {};

TEST_P(CheckpointTest, ResumeIsBitIdentical) {
  const Shape shape{3, 4};
  OptimizerConfig config{.algorithm = GetParam(),
                         .learning_rate = 0.05,
                         .momentum = 0.9,
                         .schedule = {.kind = ScheduleKind::kRsqrtModelDim,
                                      .warmup_steps = 5,
                                      .model_dim = 4.0}};
  auto make = [&] {
    return Optimizer(config, shape, Cover(full_axis_cover(shape)));
  };
  SplitMix64 rng(77);
  std::vector<ParamTensor> stream;
  for (int t = 0; t < 40; ++t) stream.push_back(testing::random_tensor(rng, shape));

  Optimizer straight = make();
  ParamTensor ws(shape);
  for (const auto& g : stream) straight.step(ws, g);

  Optimizer first = make();
  ParamTensor wr(shape);
  for (int t = 0; t < 20; ++t) first.step(wr, stream[t]);
  const std::string ckpt = first.checkpoint_json();
  Optimizer resumed = make();
  resumed.restore_checkpoint(ckpt);
  EXPECT_EQ(resumed.checkpoint_json(), ckpt);
  for (int t = 20; t < 40; ++t) resumed.step(wr, stream[t]);

  EXPECT_EQ(wr, ws);
  EXPECT_EQ(resumed.checkpoint_json(), straight.checkpoint_json());
}

INSTANTIATE_TEST_SUITE_P(AllAlgorithms, CheckpointTest,
                         ::testing::Values(Algorithm::kSm3I, Algorithm::kSm3II,
                                           Algorithm::kAdagrad,
                                           Algorithm::kAdam),
                         [](const auto& info) {
                           return std::string(algorithm_name(info.param));
                         });

TEST(CheckpointErrorsTest, RejectsMismatchedCheckpoints) {
  const Shape shape{2, 2};
  Optimizer a({.algorithm = Algorithm::kSm3I, .learning_rate = 0.1}, shape,
              Cover(full_axis_cover(shape)));
  Optimizer b({.algorithm = Algorithm::kAdagrad, .learning_rate = 0.1}, shape);
  EXPECT_THROW(b.restore_checkpoint(a.checkpoint_json()), Error);
  Optimizer c({.algorithm = Algorithm::kSm3I, .learning_rate = 0.1}, shape,
              Cover(axis_cover(shape, {0})));
  EXPECT_THROW(c.restore_checkpoint(a.checkpoint_json()), Error);
  EXPECT_THROW(a.restore_checkpoint("{"), Error);
}

}  // namespace
}  // namespace sm3

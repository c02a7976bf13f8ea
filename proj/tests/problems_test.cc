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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "oracles.h"
#include "sm3/error.h"
#include "sm3/optimizer.h"

namespace sm3 {
namespace {

using testing::Vec;

SparseLogRegOptions small_logreg(ActivationPatternSpec pattern,
                                 std::uint64_t seed) {
  SparseLogRegOptions options;
  options.pattern = std::move(pattern);
  options.seed = seed;
  options.examples = 256;
  options.comparator_steps = 3000;
  return options;
}

std::vector<std::unique_ptr<Problem>> problem_zoo() {
  std::vector<std::unique_ptr<Problem>> zoo;
  zoo.push_back(quadratic_problem(7, 3));
  zoo.push_back(std::make_unique<QuadraticProblem>(
      QuadraticOptions{.shape = Shape{3, 2}, .seed = 5, .noise = 2.0}));
  zoo.push_back(linear_adversary_problem(9, 1.5, 4));
  ActivationPatternSpec pattern{.shape = Shape{6, 4},
                                .row_scales = {1.0, 3.0},
                                .col_scales = {2.0, 0.5},
                                .row_active_prob = 0.5,
                                .col_active_prob = 0.8};
  auto options = small_logreg(pattern, 8);
  options.batch = 4;
  options.l2 = 0.01;
  zoo.push_back(std::make_unique<SparseLogRegProblem>(options));
  return zoo;
}

TEST(ProblemPropertyTest, GradientMatchesFiniteDifferences) {
  SplitMix64 rng(12);
  for (const auto& problem : problem_zoo()) {
    for (int point = 0; point < 10; ++point) {
      const auto w = testing::random_tensor(rng, problem->shape(), 2.0);
      const std::int64_t t = 1 + static_cast<std::int64_t>(rng.below(500));
      const auto analytic = problem->gradient(w, t);
      const auto numeric = testing::finite_difference_gradient(*problem, w, t);
      EXPECT_LE(testing::relative_error(analytic, numeric), 1e-5)
          << problem->name() << " point " << point;
    }
  }
}

TEST(ProblemPropertyTest, LossIsConvexAlongRandomSegments) {
  SplitMix64 rng(13);
  for (const auto& problem : problem_zoo()) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto a = testing::random_tensor(rng, problem->shape(), 3.0);
      const auto b = testing::random_tensor(rng, problem->shape(), 3.0);
      const double lambda = rng.uniform();
      ParamTensor mid(problem->shape());
      for (std::size_t i = 0; i < mid.size(); ++i) {
        mid.mutable_values()[i] = lambda * a[i] + (1.0 - lambda) * b[i];
      }
      const std::int64_t t = 1 + trial;
      const double chord =
          lambda * problem->loss(a, t) + (1.0 - lambda) * problem->loss(b, t);
      EXPECT_LE(problem->loss(mid, t), chord + 1e-12 * (1.0 + std::abs(chord)))
          << problem->name();
    }
  }
}

TEST(ProblemPropertyTest, StreamsAreReproducible) {
  auto first = problem_zoo();
  auto second = problem_zoo();
  SplitMix64 rng(14);
  for (std::size_t p = 0; p < first.size(); ++p) {
    const auto w = testing::random_tensor(rng, first[p]->shape());
    for (std::int64_t t = 1; t <= 50; ++t) {
      ASSERT_EQ(first[p]->gradient(w, t), second[p]->gradient(w, t));
      ASSERT_EQ(first[p]->loss(w, t), second[p]->loss(w, t));
    }
  }
}

TEST(ProblemPropertyTest, SeedsChangeTheStream) {
  auto a = quadratic_problem(5, 1);
  auto b = quadratic_problem(5, 2);
  const ParamTensor w(Shape{5});
  EXPECT_NE(a->gradient(w, 1), b->gradient(w, 1));
  auto c = linear_adversary_problem(5, 1.0, 1);
  auto d = linear_adversary_problem(5, 1.0, 2);
  EXPECT_NE(c->gradient(w, 1), d->gradient(w, 1));
}

// -- Quadratic -----------------------------------------------------------------

TEST(QuadraticTest, ConstantTarget) {
  QuadraticProblem problem(
      {.shape = Shape{1}, .noise = 0.0, .center = Vec{3.0}});
  EXPECT_EQ(problem.gradient(ParamTensor(Shape{1}), 1).data(), (Vec{-3.0}));
  EXPECT_EQ(problem.comparator(10)->data(), (Vec{3.0}));
  EXPECT_EQ(problem.gradient(ParamTensor(Shape{1}, {3.0}), 7).data(),
            (Vec{0.0}));
}

TEST(QuadraticTest, GradientVanishesAtTheDrawnTarget) {
  auto problem = quadratic_problem(6, 9);
  const auto& quad = dynamic_cast<const QuadraticProblem&>(*problem);
  for (std::int64_t t = 1; t <= 20; ++t) {
    const ParamTensor at(Shape{6}, quad.target(t));
    const auto g = problem->gradient(at, t);
    for (double v : g.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(QuadraticTest, ObjectiveIsTheExpectedLoss) {
  auto problem = quadratic_problem(3, 21);
  const ParamTensor w(Shape{3}, {0.2, -0.4, 1.0});
  double mean = 0.0;
  const int n = 200000;
  for (int t = 1; t <= n; ++t) mean += problem->loss(w, t) / n;
  EXPECT_NEAR(mean, *problem->objective(w), 5e-3);
}

TEST(QuadraticTest, TunedAdagradAverageIterateReachesTheCenter) {
  auto problem = quadratic_problem(4, 33);
  const auto star = *problem->comparator(2000);
  double best_objective = std::numeric_limits<double>::infinity();
  double best_distance = 0.0;
  for (double lr : {0.01, 0.03, 0.1, 0.3, 1.0}) {
    AdagradState state(4);
    ParamTensor w(Shape{4});
    Vec average(4, 0.0);
    for (std::int64_t t = 1; t <= 2000; ++t) {
      adagrad_step(state, w, problem->gradient(w, t), lr);
      for (std::size_t i = 0; i < 4; ++i) average[i] += w[i] / 2000.0;
    }
    const ParamTensor avg(Shape{4}, average);
    const double objective = *problem->objective(avg);
    if (objective < best_objective) {
      best_objective = objective;
      best_distance = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        best_distance = std::max(best_distance, std::abs(avg[i] - star[i]));
      }
    }
  }
  EXPECT_LE(best_distance, 0.1);
}

TEST(QuadraticTest, RejectsZeroDimension) {
  EXPECT_THROW(quadratic_problem(0, 1), Error);
}

// -- Linear adversary ----------------------------------------------------------

TEST(LinearAdversaryTest, ConstantGradientComparator) {
  LinearAdversaryProblem problem(
      {.shape = Shape{2}, .radius = 1.0, .noise = 0.0, .bias = Vec{1.0, -1.0}});
  const auto star = *problem.comparator(10);
  EXPECT_EQ(star.data(), (Vec{-1.0, 1.0}));
  double total = 0.0;
  for (std::int64_t t = 1; t <= 10; ++t) total += problem.loss(star, t);
  EXPECT_EQ(total, -20.0);
  EXPECT_EQ(problem.diameter(), 2.0);
}

TEST(LinearAdversaryTest, ComparatorMinimizesOverTheBall) {
  auto problem = linear_adversary_problem(6, 0.7, 17);
  const std::int64_t horizon = 300;
  const auto star = *problem->comparator(horizon);
  auto total = [&](const ParamTensor& w) {
    double s = 0.0;
    for (std::int64_t t = 1; t <= horizon; ++t) s += problem->loss(w, t);
    return s;
  };
  const double best = total(star);
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    EXPECT_GE(total(testing::random_tensor(rng, Shape{6}, 0.7)), best - 1e-9);
  }
  for (double v : star.data()) EXPECT_EQ(std::abs(v), 0.7);
}

TEST(LinearAdversaryTest, ZeroGradientsGiveZeroRegret) {
  LinearAdversaryProblem problem(
      {.shape = Shape{3}, .noise = 0.0, .bias = Vec{0.0, 0.0, 0.0}});
  const auto star = *problem.comparator(50);
  Sm3IIState state(singleton_cover(3));
  ParamTensor w(Shape{3});
  double regret = 0.0;
  for (std::int64_t t = 1; t <= 50; ++t) {
    regret += problem.loss(w, t) - problem.loss(star, t);
    sm3_ii_step(state, w, problem.gradient(w, t), 1.0);
  }
  EXPECT_EQ(regret, 0.0);
}

TEST(LinearAdversaryTest, DiameterIsTwiceTheRadius) {
  EXPECT_EQ(linear_adversary_problem(4, 2.5, 0)->diameter(), 5.0);
  EXPECT_FALSE(quadratic_problem(4, 0)->diameter().has_value());
}

TEST(LinearAdversaryTest, RejectsNonPositiveRadius) {
  EXPECT_THROW(linear_adversary_problem(4, 0.0, 0), Error);
}

// -- Sparse logistic regression ------------------------------------------------

TEST(SparseLogRegTest, LossAtZeroIsLogTwo) {
  SparseLogRegProblem problem(small_logreg({.shape = Shape{5, 3}}, 1));
  const ParamTensor zero(Shape{5, 3});
  for (std::int64_t t = 1; t <= 10; ++t) {
    EXPECT_DOUBLE_EQ(problem.loss(zero, t), std::log(2.0));
  }
  EXPECT_NEAR(*problem.objective(zero), std::log(2.0), 1e-12);
}

TEST(SparseLogRegTest, DenseEqualScalesKeepRowsWithinConstantFactor) {
  SparseLogRegProblem problem(small_logreg({.shape = Shape{8, 6}}, 2));
  AdagradState state(48);
  ParamTensor w(Shape{8, 6});
  double worst = 1.0;
  for (std::int64_t t = 1; t <= 100; ++t) {
    const auto g = problem.gradient(w, t);
    for (std::size_t i = 0; i < 8; ++i) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        lo = std::min(lo, std::abs(g[i * 6 + j]));
        hi = std::max(hi, std::abs(g[i * 6 + j]));
      }
      if (hi > 0.0) worst = std::min(worst, lo / hi);
    }
    adagrad_step(state, w, g, 0.05);
  }
  // Feature magnitudes lie in [0.5, 1]; the l2 term perturbs this slightly.
  EXPECT_GE(worst, 0.4);
}

TEST(SparseLogRegTest, RowBlocksWithDifferentScalesAreVisible) {
  SparseLogRegProblem problem(small_logreg(
      {.shape = Shape{8, 4}, .row_scales = {1.0, 10.0}, .row_active_prob = 0.7},
      3));
  const ParamTensor w(Shape{8, 4});
  Vec row_max(8, 0.0);
  for (std::int64_t t = 1; t <= 100; ++t) {
    const auto g = problem.gradient(w, t);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        row_max[i] = std::max(row_max[i], std::abs(g[i * 4 + j]));
      }
    }
  }
  const double low = *std::max_element(row_max.begin(), row_max.begin() + 4);
  const double high = *std::min_element(row_max.begin() + 4, row_max.end());
  EXPECT_GE(high, 5.0 * low);
}

TEST(SparseLogRegTest, InactiveRowsHaveZeroGradient) {
  auto options = small_logreg(
      {.shape = Shape{10, 3}, .row_active_prob = 0.3}, 4);
  options.l2 = 0.0;
  SparseLogRegProblem problem(options);
  const ParamTensor w(Shape{10, 3});
  std::size_t zero_rows = 0;
  for (std::int64_t t = 1; t <= 50; ++t) {
    const auto g = problem.gradient(w, t);
    for (std::size_t i = 0; i < 10; ++i) {
      const bool all_zero = g[i * 3] == 0.0 && g[i * 3 + 1] == 0.0 &&
                            g[i * 3 + 2] == 0.0;
      const bool any_zero = g[i * 3] == 0.0 || g[i * 3 + 1] == 0.0 ||
                            g[i * 3 + 2] == 0.0;
      EXPECT_EQ(all_zero, any_zero);
      zero_rows += all_zero;
    }
  }
  EXPECT_GT(zero_rows, 200u);
}

TEST(SparseLogRegTest, ComparatorImprovesOnZero) {
  SparseLogRegProblem problem(small_logreg(
      {.shape = Shape{4, 4}, .row_scales = {1.0, 2.0}}, 5));
  const auto star = *problem.comparator(100);
  EXPECT_LT(*problem.objective(star), 0.9 * std::log(2.0));
  EXPECT_EQ(star, *problem.comparator(5000));  // cached, horizon-free
}

TEST(SparseLogRegTest, RejectsInvalidPatterns) {
  EXPECT_THROW(validate_pattern({.shape = Shape{4, 4}, .row_scales = {0.0}}),
               Error);
  EXPECT_THROW(validate_pattern({.shape = Shape{4, 4}, .row_scales = {1, 2, 3}}),
               Error);
  EXPECT_THROW(
      validate_pattern({.shape = Shape{4, 4}, .row_active_prob = 0.0}), Error);
  EXPECT_THROW(
      validate_pattern({.shape = Shape{4, 4}, .col_active_prob = 1.5}), Error);
  EXPECT_THROW(validate_pattern({.shape = Shape{4}}), Error);
}

}  // namespace
}  // namespace sm3

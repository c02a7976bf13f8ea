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

#ifndef SM3_METRICS_H_
#define SM3_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sm3/cover.h"
#include "sm3/optimizer.h"
#include "sm3/tensor.h"

namespace sm3 {

// Prefix sums of alg[t] - star[t]. Throws kLengthMismatch.
std::vector<double> regret(std::span<const double> losses_alg,
                           std::span<const double> losses_star);

// Streaming evaluation of
//   2 D sum_i sqrt( min_{r : S_r contains i} sum_t max_{j in S_r} g_t(j)^2 )
// over the explicit sets of the cover. Works from the gradients alone and
// shares no code with the optimizer steps.
class RegretBound {
 public:
  explicit RegretBound(const Cover& cover);

  void add(std::span<const double> g);
  double rhs(double diameter) const;
  std::int64_t steps() const { return steps_; }

 private:
  GenericCover cover_;
  std::vector<double> set_sums_;
  std::int64_t steps_ = 0;
};

double regret_bound_rhs(double diameter, std::span<const ParamTensor> stream,
                        const Cover& cover);

struct DumpRow {
  std::size_t param_index = 0;  // 0-based
  double adagrad = 0.0;         // gamma_T
  double sm3_ii = 0.0;          // nu'_T
  double sm3_i = 0.0;           // nu_T
};

// The top_n largest Adagrad accumulators (descending, ties by index) with the
// SM3-II and SM3-I values of the same parameters. top_n is clamped to d.
// Throws kInconsistentDimensions when the vectors differ in length.
std::vector<DumpRow> accumulator_dump(std::span<const double> gamma,
                                      std::span<const double> nu_prime,
                                      std::span<const double> nu,
                                      std::size_t top_n);

// CSV with header param_index,adagrad,sm3_ii,sm3_i.
std::string dump_to_csv(std::span<const DumpRow> rows);

// Feeds one gradient stream through Adagrad, SM3-I and SM3-II accumulators
// side by side (no parameter updates), for dumps and invariant audits.
class AccumulatorTracker {
 public:
  explicit AccumulatorTracker(Cover cover);

  void observe(const ParamTensor& g);

  std::int64_t step() const { return step_; }
  const std::vector<double>& gamma() const { return gamma_; }
  const std::vector<double>& nu() const { return nu_; }
  const std::vector<double>& nu_prime() const { return nu_prime_; }
  const Sm3IState& sm3_i() const { return sm3_i_; }
  const Sm3IIState& sm3_ii() const { return sm3_ii_; }

  std::string checkpoint_json() const;
  // Restores accumulators verbatim; does not check invariants.
  void restore_checkpoint(const std::string& text);

 private:
  std::size_t d_;
  Sm3IState sm3_i_;
  Sm3IIState sm3_ii_;
  AdagradState adagrad_;
  std::vector<double> gamma_;
  std::vector<double> nu_;
  std::vector<double> nu_prime_;
  std::int64_t step_ = 0;
};

struct InvariantViolation {
  std::string invariant;  // "monotonicity", "sandwich", "max_maintenance"
  std::size_t index = 0;  // parameter index, or set index for max_maintenance
  std::string message;
};

// Checks, for every parameter i,
//   nu_prev(i) <= nu(i),  nu_prime_prev(i) <= nu_prime(i)
//   gamma(i) <= nu_prime(i) <= nu(i)
// with relative tolerance `rel_tol`. Empty `*_prev` spans skip the
// monotonicity check.
std::optional<InvariantViolation> check_accumulator_invariants(
    std::span<const double> nu_prev, std::span<const double> nu_prime_prev,
    std::span<const double> gamma, std::span<const double> nu_prime,
    std::span<const double> nu, double rel_tol = 1e-9);

// Checks that every tracker state satisfies the sandwich and that each
// mu'(r) equals the max of nu' over S_r, and that recomputing nu from mu does
// not fall below the recorded nu.
std::optional<InvariantViolation> check_tracker_consistency(
    const AccumulatorTracker& tracker, double rel_tol = 1e-9);

// Memory is counted in scalar slots (bytes = 8 x slots).
struct TensorMemory {
  Shape shape;
  std::size_t parameter_slots = 0;
  std::size_t accumulator_slots = 0;
  std::size_t momentum_slots = 0;
};

struct MemoryAccount {
  std::vector<TensorMemory> tensors;
  std::size_t parameter_slots = 0;
  std::size_t accumulator_slots = 0;
  std::size_t momentum_slots = 0;

  std::size_t optimizer_slots() const {
    return accumulator_slots + momentum_slots;
  }
};

enum class CoverKind { kSingleton, kAxes, kCustom };

// Cover choice for a tensor: singleton sets, co-dimension-1 slices along
// `axes` (empty means all axes), or an explicit cover.
struct CoverSpec {
  CoverKind kind = CoverKind::kSingleton;
  std::vector<std::size_t> axes;
  std::optional<GenericCover> custom;
};

Cover build_cover(const CoverSpec& spec, const Shape& shape);
// k for the cover `spec` would build on `shape`, without materialising it.
std::size_t cover_slot_count(const CoverSpec& spec, const Shape& shape);

// Adagrad d, Adam 2d, SM3-I k, SM3-II 2k (double buffer); +d with momentum.
MemoryAccount memory_account(std::span<const Shape> shapes,
                             const OptimizerConfig& config,
                             const CoverSpec& cover);

struct RunRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double regret = 0.0;
  double lr_multiplier = 0.0;
  double update_norm = 0.0;
  double step_ms = 0.0;
};

// CSV with header step,loss,regret,lr_multiplier,update_norm,step_ms.
std::string run_records_csv(std::span<const RunRecord> records);

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

}  // namespace sm3

#endif  // SM3_METRICS_H_

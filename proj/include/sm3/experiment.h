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

#ifndef SM3_EXPERIMENT_H_
#define SM3_EXPERIMENT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "sm3/metrics.h"
#include "sm3/optimizer.h"
#include "sm3/problems.h"

namespace sm3 {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInvariantViolation = 3;

using ProblemOptions =
    std::variant<QuadraticOptions, LinearAdversaryOptions, SparseLogRegOptions>;

struct NamedOptimizer {
  std::string name;
  OptimizerConfig config;
};

struct ExperimentConfig {
  int schema_version = 1;
  ProblemOptions problem;
  CoverSpec cover;
  std::vector<NamedOptimizer> optimizers;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::optional<std::size_t> dump_top_n;
  bool record_wall_clock = false;
  std::optional<std::string> audit_resume_from;
  double audit_tolerance = 1e-9;
  std::string config_hash;  // FNV-1a 64 of the config file bytes, hex
};

// Parses and validates a config document. Relative paths inside it resolve
// against `base_dir`. Unknown keys are rejected. Throws sm3::Error whose
// message starts with the offending field path.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& base_dir = ".");

std::string fnv1a_hex(const std::string& bytes);

std::unique_ptr<Problem> make_problem(const ProblemOptions& options,
                                      std::uint64_t seed);
const Shape& problem_shape(const ProblemOptions& options);

// One optimizer following its own trajectory on a problem, starting at w = 0.
class Trajectory {
 public:
  Trajectory(const Problem& problem, const NamedOptimizer& optimizer,
             const CoverSpec& cover, std::int64_t horizon,
             bool record_wall_clock);

  // Runs round t = step() + 1 and returns its diagnostics. When `gradient`
  // is non-null it receives g_t.
  StepDiagnostics advance(ParamTensor* gradient = nullptr);

  std::int64_t step() const { return optimizer_.step_count(); }
  const ParamTensor& params() const { return w_; }
  const Optimizer& optimizer() const { return optimizer_; }
  const std::vector<RunRecord>& records() const { return records_; }
  const MemoryAccount& memory() const { return memory_; }
  const std::string& name() const { return name_; }

  // Objective at the current iterate if the problem defines one, else the
  // last recorded round loss.
  std::optional<double> final_loss() const;
  std::optional<double> final_regret() const;
  std::optional<double> bound_rhs() const;

  std::string checkpoint_json() const;
  void restore_checkpoint(const std::string& text);

 private:
  const Problem& problem_;
  std::string name_;
  Optimizer optimizer_;
  ParamTensor w_;
  std::optional<ParamTensor> comparator_;
  std::optional<RegretBound> bound_;
  std::optional<double> diameter_;
  MemoryAccount memory_;
  std::vector<RunRecord> records_;
  double cumulative_regret_ = 0.0;
  bool record_wall_clock_;
};

enum class Command { kRun, kCompare, kAudit };

struct CommandOptions {
  Command command = Command::kRun;
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
};

// Executes a command end to end and returns the process exit code:
// 0 success, 1 runtime error, 2 config error, 3 invariant violation.
int execute(const CommandOptions& options, std::ostream& out,
            std::ostream& err);

}  // namespace sm3

#endif  // SM3_EXPERIMENT_H_

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

#include "sm3/experiment.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sm3/error.h"

namespace sm3 {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr std::string_view kAuditFormat = "sm3-audit-checkpoint";

[[noreturn]] void config_error(const std::string& path,
                               const std::string& message) {
  throw Error(ErrorCode::kInvalidConfig, fmt::format("{}: {}", path, message));
}

// Reads fields from one JSON object and rejects any key not consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    if (!has(key)) config_error(field(key), "required field is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) config_error(field(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::int64_t integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) config_error(field(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const auto v = integer(key);
    if (v < 0) config_error(field(key), "must be >= 0");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) config_error(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) config_error(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) config_error(field(key), "expected an array");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) config_error(field(key), "expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> indices(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) config_error(field(key), "expected an array");
    std::vector<std::size_t> out;
    for (const auto& x : v) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 0) {
        config_error(field(key), "expected non-negative integers");
      }
      out.push_back(x.get<std::size_t>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) config_error(field(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Shape read_shape(ObjectReader& r) {
  const auto dims = r.indices("shape");
  if (dims.empty()) config_error(r.field("shape"), "must have rank >= 1");
  for (auto n : dims) {
    if (n == 0) config_error(r.field("shape"), "dimensions must be >= 1");
  }
  return Shape(dims);
}

ProblemOptions read_problem(const json& j) {
  ObjectReader r(j, "problem");
  const std::string kind = r.string("kind");
  ProblemOptions result;
  if (kind == "quadratic") {
    QuadraticOptions o;
    o.shape = read_shape(r);
    o.noise = r.number("noise", o.noise);
    o.center_scale = r.number("center_scale", o.center_scale);
    if (r.has("center")) o.center = r.numbers("center");
    if (!(o.noise >= 0.0)) config_error(r.field("noise"), "must be >= 0");
    if (o.center && o.center->size() != o.shape.size()) {
      config_error(r.field("center"), "length must equal the shape size");
    }
    result = o;
  } else if (kind == "linear_adversary") {
    LinearAdversaryOptions o;
    o.shape = read_shape(r);
    o.radius = r.number("radius", o.radius);
    o.noise = r.number("noise", o.noise);
    o.bias_scale = r.number("bias_scale", o.bias_scale);
    if (r.has("bias")) o.bias = r.numbers("bias");
    if (!(o.radius > 0.0)) config_error(r.field("radius"), "must be > 0");
    if (!(o.noise >= 0.0)) config_error(r.field("noise"), "must be >= 0");
    if (!(o.bias_scale >= 0.0)) {
      config_error(r.field("bias_scale"), "must be >= 0");
    }
    if (o.bias && o.bias->size() != o.shape.size()) {
      config_error(r.field("bias"), "length must equal the shape size");
    }
    result = o;
  } else if (kind == "sparse_logreg") {
    SparseLogRegOptions o;
    o.pattern.shape = read_shape(r);
    if (o.pattern.shape.rank() != 2) {
      config_error(r.field("shape"), "sparse_logreg needs a matrix shape");
    }
    if (r.has("row_scales")) o.pattern.row_scales = r.numbers("row_scales");
    if (r.has("col_scales")) o.pattern.col_scales = r.numbers("col_scales");
    o.pattern.row_active_prob =
        r.number("row_active_prob", o.pattern.row_active_prob);
    o.pattern.col_active_prob =
        r.number("col_active_prob", o.pattern.col_active_prob);
    o.examples = r.count("examples", o.examples);
    o.batch = r.count("batch", o.batch);
    o.label_noise = r.number("label_noise", o.label_noise);
    o.l2 = r.number("l2", o.l2);
    o.comparator_steps = r.integer("comparator_steps", o.comparator_steps);
    o.comparator_lr = r.number("comparator_lr", o.comparator_lr);
    try {
      validate_pattern(o.pattern);
    } catch (const Error& e) {
      config_error("problem", e.what());
    }
    if (o.examples == 0) config_error(r.field("examples"), "must be >= 1");
    if (o.batch == 0) config_error(r.field("batch"), "must be >= 1");
    if (!(o.label_noise >= 0.0 && o.label_noise < 0.5)) {
      config_error(r.field("label_noise"), "must lie in [0, 0.5)");
    }
    if (!(o.l2 >= 0.0)) config_error(r.field("l2"), "must be >= 0");
    if (o.comparator_steps < 1) {
      config_error(r.field("comparator_steps"), "must be >= 1");
    }
    if (!(o.comparator_lr > 0.0)) {
      config_error(r.field("comparator_lr"), "must be > 0");
    }
    result = o;
  } else {
    config_error(r.field("kind"), fmt::format("unknown problem kind '{}'", kind));
  }
  r.finish();
  return result;
}

CoverSpec read_cover(const json& j, const std::string& base_dir,
                     const Shape& shape) {
  ObjectReader r(j, "cover");
  const std::string kind = r.string("kind");
  CoverSpec spec;
  if (kind == "singleton") {
    spec.kind = CoverKind::kSingleton;
  } else if (kind == "axes") {
    spec.kind = CoverKind::kAxes;
    if (r.has("axes")) {
      spec.axes = r.indices("axes");
      if (spec.axes.empty()) config_error(r.field("axes"), "must be nonempty");
      for (auto a : spec.axes) {
        if (a >= shape.rank()) {
          config_error(r.field("axes"),
                       fmt::format("axis {} out of range for shape {}", a,
                                   shape.to_string()));
        }
      }
    }
  } else if (kind == "custom") {
    spec.kind = CoverKind::kCustom;
    fs::path path = r.string("path");
    if (path.is_relative()) path = fs::path(base_dir) / path;
    try {
      spec.custom = load_cover_file(path.string());
    } catch (const Error& e) {
      config_error(r.field("path"), e.what());
    }
    if (spec.custom->d() != shape.size()) {
      config_error(r.field("path"),
                   fmt::format("cover has d = {} but the problem has {} "
                               "parameters",
                               spec.custom->d(), shape.size()));
    }
  } else {
    config_error(r.field("kind"), fmt::format("unknown cover kind '{}'", kind));
  }
  r.finish();
  return spec;
}

ScheduleSpec read_schedule(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ScheduleSpec s;
  try {
    s.kind = parse_schedule_kind(r.string("kind"));
  } catch (const Error& e) {
    config_error(r.field("kind"), e.what());
  }
  s.warmup_steps = r.integer("warmup_steps", s.warmup_steps);
  s.model_dim = r.number("model_dim", s.model_dim);
  s.total_steps = r.integer("total_steps", s.total_steps);
  s.decay = r.number("decay", s.decay);
  s.interval = r.integer("interval", s.interval);
  s.floor_lr = r.number("floor_lr", s.floor_lr);
  r.finish();
  try {
    validate_schedule(s);
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return s;
}

NamedOptimizer read_optimizer(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  NamedOptimizer named;
  OptimizerConfig& c = named.config;
  try {
    c.algorithm = parse_algorithm(r.string("algorithm"));
  } catch (const Error& e) {
    config_error(r.field("algorithm"), e.what());
  }
  named.name = r.has("name") ? r.string("name")
                             : std::string(algorithm_name(c.algorithm));
  if (named.name.empty() ||
      named.name.find_first_not_of("abcdefghijklmnopqrstuvwxyz"
                                   "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
          std::string::npos) {
    config_error(r.field("name"), "must be nonempty and use [A-Za-z0-9_-]");
  }
  c.learning_rate = r.number("learning_rate");
  c.momentum = r.number("momentum", 0.0);
  if (r.has("projection_radius")) {
    c.projection_radius = r.number("projection_radius");
  }
  if (r.has("schedule")) {
    c.schedule = read_schedule(r.raw("schedule"), r.field("schedule"));
  }
  if (r.has("adam")) {
    if (c.algorithm != Algorithm::kAdam) {
      config_error(r.field("adam"), "only valid for algorithm 'adam'");
    }
    ObjectReader a(r.raw("adam"), r.field("adam"));
    c.adam.beta1 = a.number("beta1", c.adam.beta1);
    c.adam.beta2 = a.number("beta2", c.adam.beta2);
    c.adam.epsilon = a.number("epsilon", c.adam.epsilon);
    a.finish();
  }
  r.finish();
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    config_error(r.field("learning_rate"),
                 fmt::format("must be > 0, got {}", c.learning_rate));
  }
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) {
    config_error(r.field("momentum"), "must lie in [0, 1)");
  }
  if (c.projection_radius && !(*c.projection_radius > 0.0)) {
    config_error(r.field("projection_radius"), "must be > 0");
  }
  try {
    validate_config(c);
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return named;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ordered_json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

ordered_json memory_json(const MemoryAccount& m) {
  ordered_json j;
  j["unit"] = "scalar_slots";
  j["parameter_slots"] = m.parameter_slots;
  j["accumulator_slots"] = m.accumulator_slots;
  j["momentum_slots"] = m.momentum_slots;
  j["optimizer_slots"] = m.optimizer_slots();
  ordered_json tensors = ordered_json::array();
  for (const auto& t : m.tensors) {
    tensors.push_back({{"shape", t.shape.dims()},
                       {"parameter_slots", t.parameter_slots},
                       {"accumulator_slots", t.accumulator_slots},
                       {"momentum_slots", t.momentum_slots}});
  }
  j["tensors"] = std::move(tensors);
  return j;
}

ordered_json trajectory_summary(const Trajectory& t) {
  ordered_json j;
  j["final_loss"] = optional_number(t.final_loss());
  j["final_regret"] = optional_number(t.final_regret());
  j["bound_rhs"] = optional_number(t.bound_rhs());
  j["slots"] = t.memory().optimizer_slots();
  return j;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("config: {}", e.what()));
  }
  ObjectReader r(j, "");
  ExperimentConfig config;
  config.config_hash = fnv1a_hex(text);
  config.schema_version = static_cast<int>(r.integer("schema_version"));
  if (config.schema_version != kSchemaVersion) {
    config_error("schema_version",
                 fmt::format("unsupported version {}, expected {}",
                             config.schema_version, kSchemaVersion));
  }
  config.problem = read_problem(r.raw("problem"));
  const Shape& shape = problem_shape(config.problem);
  if (r.has("cover")) {
    config.cover = read_cover(r.raw("cover"), base_dir, shape);
  }
  const json& opts = r.raw("optimizers");
  if (!opts.is_array() || opts.empty()) {
    config_error("optimizers", "expected a nonempty array");
  }
  std::set<std::string> names;
  for (std::size_t k = 0; k < opts.size(); ++k) {
    auto named = read_optimizer(opts[k], fmt::format("optimizers[{}]", k));
    if (!names.insert(named.name).second) {
      config_error(fmt::format("optimizers[{}].name", k),
                   fmt::format("duplicate name '{}'", named.name));
    }
    config.optimizers.push_back(std::move(named));
  }
  config.steps = r.integer("steps");
  if (config.steps < 1) config_error("steps", "must be >= 1");
  const auto seed = r.integer("seed", 0);
  if (seed < 0) config_error("seed", "must be >= 0");
  config.seed = static_cast<std::uint64_t>(seed);
  if (r.has("output_dir")) {
    fs::path out = r.string("output_dir");
    if (out.is_relative()) out = fs::path(base_dir) / out;
    config.output_dir = out.string();
  }
  config.record_wall_clock = r.boolean("record_wall_clock", false);
  if (r.has("dump")) {
    ObjectReader d(r.raw("dump"), "dump");
    config.dump_top_n = d.count("top_n", 100);
    d.finish();
  }
  if (r.has("audit")) {
    ObjectReader a(r.raw("audit"), "audit");
    if (a.has("resume_from")) {
      fs::path p = a.string("resume_from");
      if (p.is_relative()) p = fs::path(base_dir) / p;
      config.audit_resume_from = p.string();
    }
    config.audit_tolerance = a.number("tolerance", config.audit_tolerance);
    if (!(config.audit_tolerance >= 0.0)) {
      config_error("audit.tolerance", "must be >= 0");
    }
    a.finish();
  }
  r.finish();
  return config;
}

const Shape& problem_shape(const ProblemOptions& options) {
  return std::visit(
      [](const auto& o) -> const Shape& {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, SparseLogRegOptions>) {
          return o.pattern.shape;
        } else {
          return o.shape;
        }
      },
      options);
}

std::unique_ptr<Problem> make_problem(const ProblemOptions& options,
                                      std::uint64_t seed) {
  return std::visit(
      [seed](auto o) -> std::unique_ptr<Problem> {
        using T = std::decay_t<decltype(o)>;
        o.seed = seed;
        if constexpr (std::is_same_v<T, QuadraticOptions>) {
          return std::make_unique<QuadraticProblem>(std::move(o));
        } else if constexpr (std::is_same_v<T, LinearAdversaryOptions>) {
          return std::make_unique<LinearAdversaryProblem>(std::move(o));
        } else {
          return std::make_unique<SparseLogRegProblem>(std::move(o));
        }
      },
      options);
}

// -- Trajectory -----------------------------------------------------------------

Trajectory::Trajectory(const Problem& problem, const NamedOptimizer& optimizer,
                       const CoverSpec& cover, std::int64_t horizon,
                       bool record_wall_clock)
    : problem_(problem),
      name_(optimizer.name),
      optimizer_(optimizer.config, problem.shape(),
                 uses_cover(optimizer.config.algorithm)
                     ? std::optional<Cover>(build_cover(cover, problem.shape()))
                     : std::nullopt),
      w_(problem.shape()),
      record_wall_clock_(record_wall_clock) {
  const Shape shapes[] = {problem.shape()};
  memory_ = memory_account(shapes, optimizer.config, cover);
  comparator_ = problem.comparator(horizon);
  const auto& config = optimizer.config;
  if (config.projection_radius && config.algorithm != Algorithm::kAdam) {
    // D bounds |w_t - w*|_inf: iterates stay in the projection ball.
    double star = 0.0;
    if (comparator_) {
      for (double v : comparator_->values()) star = std::max(star, std::abs(v));
    } else {
      star = *config.projection_radius;
    }
    diameter_ = *config.projection_radius + star;
    if (config.algorithm == Algorithm::kAdagrad) {
      bound_.emplace(Cover(singleton_cover(problem.shape().size())));
    } else {
      bound_.emplace(build_cover(cover, problem.shape()));
    }
  }
}

StepDiagnostics Trajectory::advance(ParamTensor* gradient) {
  const std::int64_t t = step() + 1;
  const auto start = std::chrono::steady_clock::now();
  RunRecord record;
  record.step = t;
  record.loss = problem_.loss(w_, t);
  const ParamTensor g = problem_.gradient(w_, t);
  if (comparator_) {
    cumulative_regret_ += record.loss - problem_.loss(*comparator_, t);
    record.regret = cumulative_regret_;
  } else {
    record.regret = std::nan("");
  }
  if (bound_) bound_->add(g.values());
  StepDiagnostics diag = optimizer_.step(w_, g);
  record.lr_multiplier = optimizer_.last_multiplier();
  record.update_norm = diag.update_norm;
  if (record_wall_clock_) {
    record.step_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  }
  records_.push_back(record);
  if (gradient != nullptr) *gradient = g;
  return diag;
}

std::optional<double> Trajectory::final_loss() const {
  if (auto obj = problem_.objective(w_)) return obj;
  if (records_.empty()) return std::nullopt;
  return records_.back().loss;
}

std::optional<double> Trajectory::final_regret() const {
  if (!comparator_ || records_.empty()) return std::nullopt;
  return records_.back().regret;
}

std::optional<double> Trajectory::bound_rhs() const {
  if (!bound_ || !diameter_) return std::nullopt;
  return bound_->rhs(*diameter_);
}

std::string Trajectory::checkpoint_json() const {
  ordered_json j;
  j["step"] = step();
  j["params"] = w_.data();
  j["optimizer"] = ordered_json::parse(optimizer_.checkpoint_json());
  return j.dump();
}

void Trajectory::restore_checkpoint(const std::string& text) {
  try {
    const auto j = json::parse(text);
    auto params = j.at("params").get<std::vector<double>>();
    ParamTensor w(problem_.shape(), std::move(params));
    optimizer_.restore_checkpoint(j.at("optimizer").dump());
    w_ = std::move(w);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("checkpoint: {}", e.what()));
  }
}

// -- Commands -------------------------------------------------------------------

namespace {

struct Prepared {
  ExperimentConfig config;
  std::unique_ptr<Problem> problem;
  fs::path out_dir;
};

Prepared prepare(const CommandOptions& options) {
  Prepared p;
  std::string text;
  try {
    text = read_file(options.config_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  const fs::path base = fs::path(options.config_path).parent_path();
  p.config = parse_experiment_config(text, base.empty() ? "." : base.string());
  if (options.seed) p.config.seed = *options.seed;
  if (options.output_dir) p.config.output_dir = *options.output_dir;
  if (p.config.output_dir.empty()) {
    config_error("output_dir", "no output directory (set it or pass --out)");
  }
  p.out_dir = p.config.output_dir;
  p.problem = make_problem(p.config.problem, p.config.seed);
  return p;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
}

void write_dump(const fs::path& dir, const AccumulatorTracker& tracker,
                std::size_t top_n) {
  const auto rows = accumulator_dump(tracker.gamma(), tracker.nu_prime(),
                                     tracker.nu(), top_n);
  write_file(dir / "accumulators.csv", dump_to_csv(rows));
}

int do_run(Prepared& p, std::ostream& out) {
  const auto& config = p.config;
  if (config.optimizers.size() != 1) {
    config_error("optimizers", "run takes exactly one optimizer; use compare");
  }
  Trajectory traj(*p.problem, config.optimizers.front(), config.cover,
                  config.steps, config.record_wall_clock);
  std::optional<AccumulatorTracker> tracker;
  if (config.dump_top_n) {
    tracker.emplace(build_cover(config.cover, p.problem->shape()));
  }
  ensure_dir(p.out_dir);
  ParamTensor g;
  while (traj.step() < config.steps) {
    traj.advance(tracker ? &g : nullptr);
    if (tracker) tracker->observe(g);
  }
  write_file(p.out_dir / "run.csv", run_records_csv(traj.records()));
  if (tracker) write_dump(p.out_dir, *tracker, *config.dump_top_n);
  write_file(p.out_dir / "checkpoint.json", traj.checkpoint_json() + "\n");
  write_file(p.out_dir / "memory.json", memory_json(traj.memory()).dump(2) + "\n");
  ordered_json summary = trajectory_summary(traj);
  summary["steps"] = config.steps;
  summary["config_hash"] = config.config_hash;
  write_file(p.out_dir / "summary.json", summary.dump(2) + "\n");
  out << summary.dump() << "\n";
  return kExitOk;
}

int do_compare(Prepared& p, std::ostream& out) {
  const auto& config = p.config;
  if (config.optimizers.size() < 2) {
    config_error("optimizers", "compare needs at least two optimizers");
  }
  std::vector<std::unique_ptr<Trajectory>> trajs;
  for (const auto& named : config.optimizers) {
    trajs.push_back(std::make_unique<Trajectory>(
        *p.problem, named, config.cover, config.steps,
        config.record_wall_clock));
  }
  ensure_dir(p.out_dir);
  // Independent states, so the runs proceed concurrently.
  std::vector<std::future<StepDiagnostics>> jobs;
  for (auto& t : trajs) {
    jobs.push_back(std::async(std::launch::async, [&t, &config] {
      StepDiagnostics last;
      while (t->step() < config.steps) last = t->advance();
      return last;
    }));
  }
  std::vector<StepDiagnostics> finals;
  for (auto& job : jobs) finals.push_back(job.get());

  std::string csv = "step";
  for (const auto& t : trajs) csv += ",loss_" + t->name();
  csv += "\n";
  for (std::int64_t s = 0; s < config.steps; ++s) {
    csv += std::to_string(s + 1);
    for (const auto& t : trajs) {
      csv += "," + format_double(t->records()[s].loss);
    }
    csv += "\n";
  }
  write_file(p.out_dir / "compare.csv", csv);

  std::string diag = "param_index";
  for (const auto& t : trajs) diag += ",nu_" + t->name();
  diag += "\n";
  for (std::size_t i = 0; i < p.problem->shape().size(); ++i) {
    diag += std::to_string(i);
    for (const auto& f : finals) diag += "," + format_double(f.nu[i]);
    diag += "\n";
  }
  write_file(p.out_dir / "diagnostics.csv", diag);

  ordered_json summary;
  summary["steps"] = config.steps;
  summary["config_hash"] = config.config_hash;
  summary["trajectories"] =
      p.problem->gradient_depends_on_iterate()
          ? "independent: each optimizer follows its own iterates, so "
            "gradient streams differ once the iterates do"
          : "shared: gradients depend only on (seed, t), so every optimizer "
            "consumes the identical stream";
  ordered_json per = ordered_json::object();
  for (const auto& t : trajs) {
    write_file(p.out_dir / fmt::format("run_{}.csv", t->name()),
               run_records_csv(t->records()));
    per[t->name()] = trajectory_summary(*t);
  }
  summary["optimizers"] = std::move(per);
  write_file(p.out_dir / "summary.json", summary.dump(2) + "\n");
  out << summary.dump() << "\n";
  return kExitOk;
}

int report_violation(const InvariantViolation& v, std::int64_t step,
                     const fs::path& dir, std::ostream& err) {
  err << fmt::format("invariant violation ({}) at step {}, index {}: {}\n",
                     v.invariant, step, v.index, v.message);
  ordered_json report;
  report["status"] = "fail";
  report["invariant"] = v.invariant;
  report["step"] = step;
  report["index"] = v.index;
  report["message"] = v.message;
  write_file(dir / "audit_report.json", report.dump(2) + "\n");
  return kExitInvariantViolation;
}

int do_audit(Prepared& p, std::ostream& out, std::ostream& err) {
  const auto& config = p.config;
  if (config.optimizers.size() != 1) {
    config_error("optimizers", "audit takes exactly one optimizer");
  }
  const auto& named = config.optimizers.front();
  if (!uses_cover(named.config.algorithm)) {
    config_error("optimizers[0].algorithm",
                 fmt::format("audit applies to sm3_i / sm3_ii only; '{}' has "
                             "no cover invariants",
                             algorithm_name(named.config.algorithm)));
  }
  Trajectory traj(*p.problem, named, config.cover, config.steps,
                  config.record_wall_clock);
  AccumulatorTracker tracker(build_cover(config.cover, p.problem->shape()));
  const double tol = config.audit_tolerance;
  ensure_dir(p.out_dir);

  if (config.audit_resume_from) {
    std::string text;
    json j;
    try {
      text = read_file(*config.audit_resume_from);
      j = json::parse(text);
      if (j.value("format", std::string()) != kAuditFormat) {
        throw Error(ErrorCode::kParse, "not an audit checkpoint");
      }
      traj.restore_checkpoint(j.at("trajectory").dump());
      tracker.restore_checkpoint(j.at("tracker").dump());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  fmt::format("audit.resume_from: {}", e.what()));
    }
    if (traj.step() != tracker.step()) {
      throw Error(ErrorCode::kInconsistentDimensions,
                  "audit.resume_from: trajectory and tracker steps differ");
    }
    if (auto v = check_tracker_consistency(tracker, tol)) {
      return report_violation(*v, tracker.step(), p.out_dir, err);
    }
  }

  const bool is_sm3_i = named.config.algorithm == Algorithm::kSm3I;
  ParamTensor g;
  std::int64_t checked = 0;
  while (traj.step() < config.steps) {
    const std::vector<double> nu_prev = tracker.nu();
    const std::vector<double> nu_prime_prev = tracker.nu_prime();
    const StepDiagnostics diag = traj.advance(&g);
    tracker.observe(g);
    const std::int64_t t = traj.step();
    if (auto v = check_accumulator_invariants(nu_prev, nu_prime_prev,
                                              tracker.gamma(),
                                              tracker.nu_prime(), tracker.nu(),
                                              tol)) {
      return report_violation(*v, t, p.out_dir, err);
    }
    // The optimizer's own statistics must match the shadow accumulators.
    const auto& own = is_sm3_i ? tracker.nu() : tracker.nu_prime();
    for (std::size_t i = 0; i < own.size(); ++i) {
      if (diag.nu[i] != own[i]) {
        return report_violation(
            InvariantViolation{"consistency", i,
                               fmt::format("optimizer statistic {} differs "
                                           "from the audit trace {}",
                                           diag.nu[i], own[i])},
            t, p.out_dir, err);
      }
    }
    ++checked;
  }

  ordered_json ckpt;
  ckpt["format"] = kAuditFormat;
  ckpt["version"] = 1;
  ckpt["trajectory"] = ordered_json::parse(traj.checkpoint_json());
  ckpt["tracker"] = ordered_json::parse(tracker.checkpoint_json());
  write_file(p.out_dir / "audit_checkpoint.json", ckpt.dump() + "\n");
  write_file(p.out_dir / "run.csv", run_records_csv(traj.records()));
  ordered_json report;
  report["status"] = "pass";
  report["steps_checked"] = checked;
  report["final_step"] = traj.step();
  report["config_hash"] = config.config_hash;
  write_file(p.out_dir / "audit_report.json", report.dump(2) + "\n");
  out << report.dump() << "\n";
  return kExitOk;
}

}  // namespace

int execute(const CommandOptions& options, std::ostream& out,
            std::ostream& err) {
  Prepared prepared;
  try {
    prepared = prepare(options);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    switch (options.command) {
      case Command::kRun: return do_run(prepared, out);
      case Command::kCompare: return do_compare(prepared, out);
      case Command::kAudit: return do_audit(prepared, out, err);
    }
  } catch (const Error& e) {
    const bool config_side = e.code() == ErrorCode::kInvalidConfig ||
                             e.code() == ErrorCode::kInvalidSchedule ||
                             e.code() == ErrorCode::kInconsistentDimensions ||
                             e.code() == ErrorCode::kParse;
    err << (config_side ? "config error: " : "runtime error: ") << e.what()
        << "\n";
    return config_side ? kExitConfigError : kExitRuntimeError;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitRuntimeError;
}

}  // namespace sm3

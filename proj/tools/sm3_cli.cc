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

// Experiment runner: sm3 run|compare|audit <config.json> [--out DIR] [--seed N]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sm3/experiment.h"

int main(int argc, char** argv) {
  CLI::App app{"SM3 optimizer experiment runner"};
  app.require_subcommand(1);

  sm3::CommandOptions options;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto add = [&](const char* name, const char* help, sm3::Command command) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", options.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "seed (overrides the config)");
    sub->callback([&options, command] { options.command = command; });
    return sub;
  };
  add("run", "run a single optimizer", sm3::Command::kRun);
  add("compare", "run several optimizers side by side", sm3::Command::kCompare);
  add("audit", "run while checking accumulator invariants every step",
      sm3::Command::kAudit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sm3::kExitOk : sm3::kExitConfigError;
  }

  for (const auto* sub : app.get_subcommands()) {
    if (sub->count("--out") > 0) options.output_dir = out_dir;
    if (sub->count("--seed") > 0) options.seed = seed;
  }
  return sm3::execute(options, std::cout, std::cerr);
}

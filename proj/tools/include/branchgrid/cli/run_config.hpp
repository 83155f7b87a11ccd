// Copyright 2026 The branchgrid Authors.
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


// Run configuration: one JSON document naming the network, datasets and
// output directory plus every tunable of the scenario, environment, agent,
// replay and trainer. Unknown keys are rejected at every level.

#ifndef BRANCHGRID_CLI_RUN_CONFIG_HPP_
#define BRANCHGRID_CLI_RUN_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "branchgrid/agent.hpp"
#include "branchgrid/baselines.hpp"
#include "branchgrid/env.hpp"
#include "branchgrid/grid_model.hpp"
#include "branchgrid/replay.hpp"
#include "branchgrid/trainer.hpp"

namespace branchgrid::cli {

struct RunConfig {
  // Resolved paths; relative entries are taken from the config file's
  // directory. Empty when the key is absent.
  std::string network;
  std::string train_data, eval_data, test_data;
  std::string output_dir;
  std::uint64_t seed = 0;

  ScenarioConfig scenario;
  EnvConfig env;
  // Network-independent fields only; sizes are filled by agent_for().
  AgentConfig agent;
  TrainConfig train;
  ReplayConfig replay;
  SolverOptions solver;
  DpOptions dp;
  // Overrides applied on top of profile_for() by gen-data.
  std::string profile_json = "{}";

  // Sorted, compact dump of the effective document (after the seed
  // override) and its FNV-1a 64 digest as 16 hex digits.
  std::string canonical;
  std::string hash;
};

// Throws ConfigError (unknown key, wrong type, missing file) or
// ValidationError (sub-config invariant).
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir,
                           std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_run_config(const std::string& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

// Returns the path stored under `key` ("network", "data.train", ...) or
// throws ConfigError naming the key when it is empty.
const std::string& require_path(const RunConfig& config, const std::string& key);

MicrogridEnv make_env(const RunConfig& config);
AgentConfig agent_for(const RunConfig& config, const MicrogridEnv& env);
SynthProfile synth_profile(const RunConfig& config, const MicrogridEnv& env);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace branchgrid::cli

#endif  // BRANCHGRID_CLI_RUN_CONFIG_HPP_

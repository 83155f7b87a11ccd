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


// The command implementations behind `branchgrid <command>`. Each returns
// the paths it wrote; errors propagate as the library's exception types and
// are mapped to exit codes by exit_code_for().

#ifndef BRANCHGRID_CLI_COMMANDS_HPP_
#define BRANCHGRID_CLI_COMMANDS_HPP_

#include <cstddef>
#include <exception>
#include <string>
#include <vector>

#include "branchgrid/cli/reports.hpp"
#include "branchgrid/cli/run_config.hpp"

namespace branchgrid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

int exit_code_for(const std::exception& e);

std::string cmd_gen_data(const RunConfig& config, std::size_t days, int first_day,
                         const std::string& out_dir);

struct TrainArtifacts {
  std::string checkpoint, trainlog;
};
TrainArtifacts cmd_train(const RunConfig& config, const std::string& out_dir);

struct EvalRequest {
  std::string policy;      // bdq, myopic, random, dp_oracle, relaxed_oracle
  std::string checkpoint;  // bdq only
  std::string dataset;     // empty: the config's data.test
  std::size_t days = 0;    // 0: every day in the dataset
};

// Per-day metrics against the myopic policy on the same days.
std::vector<MetricsRow> evaluate_days(const RunConfig& config, const EvalRequest& request);
std::string cmd_eval(const RunConfig& config, const EvalRequest& request,
                     const std::string& out_dir);

std::string cmd_compare(const std::vector<std::string>& metrics_files, const std::string& out_dir);
std::string cmd_plot(const std::vector<std::string>& trainlogs, const std::string& out_dir);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace branchgrid::cli

#endif  // BRANCHGRID_CLI_COMMANDS_HPP_

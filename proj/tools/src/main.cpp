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


#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "branchgrid/cli/commands.hpp"

namespace {

using namespace branchgrid::cli;

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("branchgrid");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("BRANCHGRID_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::info);
  if (level != "error" && level != "info" && level != "debug") {
    spdlog::warn("BRANCHGRID_LOG='{}' is not one of error, info, debug; using info", level);
  }
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "Run configuration JSON")->required();
    cmd->add_option("--seed", seed, "Overrides the config seed");
    cmd->add_option("--out", out, "Output directory (default: the config's output_dir)");
  }
  RunConfig load() const { return load_run_config(config, seed); }
  std::string out_dir(const RunConfig& c) const { return out.empty() ? c.output_dir : out; }
};

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"branchgrid: battery scheduling with a branching dueling Q-network"};
  app.require_subcommand(1);

  Common gen, trn, ev, orc;
  std::size_t gen_days = 0;
  int first_day = 0;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a synthetic dataset CSV");
  gen.add_to(c_gen);
  c_gen->add_option("--days", gen_days, "Number of days")->required();
  c_gen->add_option("--first-day", first_day, "day_id of the first generated day");

  auto* c_train = app.add_subcommand("train", "Train an agent; writes checkpoint and TrainLog");
  trn.add_to(c_train);

  EvalRequest req;
  auto* c_eval = app.add_subcommand("eval", "Per-day costs of a policy against myopic");
  ev.add_to(c_eval);
  c_eval->add_option("--policy", req.policy, "bdq, myopic, random, dp_oracle or relaxed_oracle")
      ->required();
  c_eval->add_option("--checkpoint", req.checkpoint, "Checkpoint manifest (policy bdq)");
  c_eval->add_option("--dataset", req.dataset, "Dataset CSV (default: data.test)");
  c_eval->add_option("--days", req.days, "Evaluate only the first N days");

  EvalRequest oreq;
  std::string method = "relaxed";
  auto* c_oracle = app.add_subcommand("oracle", "Perfect-information oracle costs");
  orc.add_to(c_oracle);
  c_oracle->add_option("--method", method, "relaxed or dp")
      ->check(CLI::IsMember({"relaxed", "dp"}));
  c_oracle->add_option("--dataset", oreq.dataset, "Dataset CSV (default: data.test)");
  c_oracle->add_option("--days", oreq.days, "Evaluate only the first N days");

  std::vector<std::string> metrics, logs;
  std::string cmp_out = ".", plot_out = ".";
  auto* c_cmp = app.add_subcommand("compare", "Mean/max/min/stddev improvement per policy");
  c_cmp->add_option("metrics", metrics, "Metrics CSV files")->required();
  c_cmp->add_option("--out", cmp_out, "Output directory");

  auto* c_plot = app.add_subcommand("plot", "SVG of evaluation returns per training run");
  c_plot->add_option("logs", logs, "TrainLog CSV files")->required();
  c_plot->add_option("--out", plot_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*c_gen) {
      const auto cfg = gen.load();
      cmd_gen_data(cfg, gen_days, first_day, gen.out_dir(cfg));
    } else if (*c_train) {
      const auto cfg = trn.load();
      cmd_train(cfg, trn.out_dir(cfg));
    } else if (*c_eval) {
      const auto cfg = ev.load();
      cmd_eval(cfg, req, ev.out_dir(cfg));
    } else if (*c_oracle) {
      const auto cfg = orc.load();
      oreq.policy = method == "dp" ? "dp_oracle" : "relaxed_oracle";
      cmd_eval(cfg, oreq, orc.out_dir(cfg));
    } else if (*c_cmp) {
      cmd_compare(metrics, cmp_out);
    } else if (*c_plot) {
      cmd_plot(logs, plot_out);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  }
  return kExitOk;
}

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


#include "branchgrid/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "branchgrid/cli/checkpoint.hpp"
#include "branchgrid/errors.hpp"

namespace branchgrid::cli {
namespace {

namespace fs = std::filesystem;

std::string in_dir(const std::string& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / name).string();
}

std::vector<ExogenousDay> load_days(const RunConfig& config, const std::string& key,
                                    const std::string& path_override = {}) {
  const std::string path = path_override.empty() ? require_path(config, key) : path_override;
  if (!fs::exists(path)) throw ConfigError(fmt::format("{}: file not found: {}", key, path));
  return load_dataset(path, &config.scenario);
}

void check_compatible(const AgentConfig& ckpt, const AgentConfig& env) {
  auto check = [](const char* what, std::size_t a, std::size_t b) {
    if (a != b) {
      throw ConfigError(
          fmt::format("checkpoint is incompatible with the network: {} is {} in the checkpoint "
                      "but {} for the configured network",
                      what, a, b));
    }
  };
  check("branch count N", ckpt.branches, env.branches);
  check("levels per branch n", ckpt.levels, env.levels);
  check("history window H", ckpt.window, env.window);
  check("scalar feature count", ckpt.scalar_features, env.scalar_features);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const ParseError*>(&e)) {
    return kExitConfig;
  }
  return kExitRuntime;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
  if (!out) throw std::runtime_error("cannot write " + path);
}

std::string cmd_gen_data(const RunConfig& config, std::size_t days, int first_day,
                         const std::string& out_dir) {
  if (days == 0) throw ConfigError("--days: must be at least 1");
  const MicrogridEnv env = make_env(config);
  std::vector<std::string> clamps;
  auto data = synth_dataset(config.seed, days, synth_profile(config, env), &clamps);
  for (const auto& c : clamps) spdlog::warn("profile clamped: {}", c);
  for (auto& d : data) d.day_id += first_day;
  const std::string path = in_dir(
      out_dir, fmt::format("dataset_s{}_d{}-{}_{}.csv", config.seed, first_day, days, config.hash));
  write_dataset(path, data);
  spdlog::info("wrote {} days to {}", days, path);
  return path;
}

TrainArtifacts cmd_train(const RunConfig& config, const std::string& out_dir) {
  const MicrogridEnv env = make_env(config);
  const auto train_days = load_days(config, "data.train");
  std::vector<ExogenousDay> eval_days;
  if (!config.eval_data.empty()) eval_days = load_days(config, "data.eval");

  BdqNetwork agent(agent_for(config, env), config.seed);
  PrioritizedReplay replay(config.replay);
  TrainHooks hooks;
  hooks.on_episode = [](const TrainLogRow& r) {
    if (r.eval_return) {
      spdlog::info("episode {} eval_return {:.4f}", r.episode, *r.eval_return);
    }
    spdlog::debug("episode {} step {} eps {:.4f} return {:.4f}{}", r.episode, r.step, r.epsilon,
                  r.episode_return, r.failed ? " (solver failure)" : "");
  };
  spdlog::info("training {} episodes on {} days (config {})", config.train.episodes,
               train_days.size(), config.hash);
  const TrainLog log =
      train(env, train_days, eval_days, agent, replay, config.train, hooks, config.solver);

  TrainArtifacts a;
  a.trainlog = in_dir(out_dir, fmt::format("trainlog_s{}_{}.csv", config.seed, config.hash));
  write_file(a.trainlog, log.to_csv());
  a.checkpoint = save_checkpoint(
      in_dir(out_dir, fmt::format("checkpoint_s{}_{}", config.seed, config.hash)), agent,
      log.grad_steps, log.env_steps, config.hash);
  spdlog::info("wrote {} and {} ({} solver failures)", a.trainlog, a.checkpoint, log.failures);
  return a;
}

std::vector<MetricsRow> evaluate_days(const RunConfig& config, const EvalRequest& request) {
  static const char* kPolicies[] = {"bdq", "myopic", "random", "dp_oracle", "relaxed_oracle"};
  if (std::find(std::begin(kPolicies), std::end(kPolicies), request.policy) ==
      std::end(kPolicies)) {
    throw ConfigError(fmt::format(
        "--policy: '{}' is not one of bdq, myopic, random, dp_oracle, relaxed_oracle",
        request.policy));
  }
  const MicrogridEnv env = make_env(config);
  std::unique_ptr<BdqNetwork> net;
  if (request.policy == "bdq") {
    if (request.checkpoint.empty()) throw ConfigError("--checkpoint: required for policy bdq");
    net = std::make_unique<BdqNetwork>(load_checkpoint(request.checkpoint));
    check_compatible(net->config(), agent_config_for(env));
  }
  auto days = load_days(config, "data.test", request.dataset);
  if (request.days > 0) {
    if (request.days > days.size()) {
      throw ConfigError(fmt::format("--days: {} requested but the dataset has {}", request.days,
                                    days.size()));
    }
    days.resize(request.days);
  }

  std::unique_ptr<Policy> policy;
  if (net) policy = std::make_unique<BdqPolicy>(*net);
  else if (request.policy == "random") policy = std::make_unique<RandomPolicy>(config.seed);
  else if (request.policy == "dp_oracle") policy = std::make_unique<DpPolicy>(config.dp, config.solver);
  MyopicPolicy myopic(config.solver);

  std::vector<MetricsRow> rows;
  for (const auto& day : days) {
    const double base = rollout(env, day, myopic, config.solver).cost;
    double cost = base;
    if (request.policy == "relaxed_oracle") cost = relaxed_oracle(env, day, config.solver);
    else if (policy) cost = rollout(env, day, *policy, config.solver).cost;
    rows.push_back({day.day_id, request.policy, cost, -cost, improvement_vs_myopic(cost, base)});
    spdlog::debug("day {} {} cost {:.4f} myopic {:.4f}", day.day_id, request.policy, cost, base);
  }
  return rows;
}

std::string cmd_eval(const RunConfig& config, const EvalRequest& request,
                     const std::string& out_dir) {
  const auto rows = evaluate_days(config, request);
  const std::string path = in_dir(
      out_dir, fmt::format("metrics_{}_s{}_{}.csv", request.policy, config.seed, config.hash));
  write_file(path, metrics_to_csv(rows));
  spdlog::info("wrote {} rows to {}", rows.size(), path);
  return path;
}

std::string cmd_compare(const std::vector<std::string>& metrics_files, const std::string& out_dir) {
  if (metrics_files.empty()) throw ConfigError("compare: at least one metrics CSV is required");
  std::vector<MetricsRow> rows;
  std::string all;
  for (const auto& f : metrics_files) {
    const std::string text = read_file(f);
    all += text;
    auto part = parse_metrics_csv(text);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) throw ValidationError("compare: the metrics files hold no rows");
  const std::string path = in_dir(out_dir, fmt::format("compare_{}.csv", fnv1a_hex(all)));
  write_file(path, summary_to_csv(summarize(rows)));
  spdlog::info("wrote {}", path);
  return path;
}

std::string cmd_plot(const std::vector<std::string>& trainlogs, const std::string& out_dir) {
  if (trainlogs.empty()) throw ConfigError("plot: at least one TrainLog CSV is required");
  std::vector<EvalTrace> traces;
  std::string all;
  for (const auto& f : trainlogs) {
    const std::string text = read_file(f);
    all += text;
    traces.push_back(parse_eval_trace(text, fs::path(f).stem().string()));
  }
  const std::string path = in_dir(out_dir, fmt::format("plot_{}.svg", fnv1a_hex(all)));
  write_file(path, render_svg(traces));
  spdlog::info("wrote {}", path);
  return path;
}

}  // namespace branchgrid::cli

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


#include "branchgrid/cli/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "branchgrid/errors.hpp"
#include "json_fields.hpp"

namespace branchgrid::cli {
namespace {

namespace fs = std::filesystem;
using detail::Fields;
using nlohmann::json;

struct ProfileField {
  const char* key;
  double SynthProfile::*member;
};

constexpr ProfileField kProfileFields[] = {
    {"sunrise_hour", &SynthProfile::sunrise_hour},
    {"sunset_hour", &SynthProfile::sunset_hour},
    {"solar_noise", &SynthProfile::solar_noise},
    {"wind_mean", &SynthProfile::wind_mean},
    {"wind_ar", &SynthProfile::wind_ar},
    {"wind_sigma", &SynthProfile::wind_sigma},
    {"morning_peak_hour", &SynthProfile::morning_peak_hour},
    {"evening_peak_hour", &SynthProfile::evening_peak_hour},
    {"load_base", &SynthProfile::load_base},
    {"load_noise", &SynthProfile::load_noise},
    {"day_start_hour", &SynthProfile::day_start_hour},
    {"day_end_hour", &SynthProfile::day_end_hour},
    {"day_price", &SynthProfile::day_price},
    {"night_price", &SynthProfile::night_price},
    {"price_noise", &SynthProfile::price_noise},
    {"sell_ratio", &SynthProfile::sell_ratio},
};

json profile_overrides(const json& j, const std::string& path) {
  Fields f(j, path);
  json out = json::object();
  for (const auto& pf : kProfileFields) {
    double v = 0.0;
    if (f.get(pf.key, v)) out[pf.key] = v;
  }
  f.finish();
  return out;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base_dir) / path).lexically_normal().string();
}

void check_exists(const std::string& key, const std::string& path) {
  if (!path.empty() && !fs::exists(path)) {
    throw ConfigError(fmt::format("{}: file not found: {}", key, path));
  }
}

void validate_env(const EnvConfig& e) {
  if (e.levels < 2) throw ValidationError("env.levels must be at least 2");
  if (!(e.history_hours > 0.0)) throw ValidationError("env.history_hours must be positive");
  if (!(e.price_scale > 0.0)) throw ValidationError("env.price_scale must be positive");
}

void validate_solver(const SolverOptions& s) {
  if (!(s.tol > 0.0) || !(s.reduced_tol >= s.tol) || s.max_iterations < 1 ||
      !(s.static_reg >= 0.0) || s.refinement_steps < 0) {
    throw ValidationError("solver options must be positive with reduced_tol >= tol");
  }
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

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir,
                           std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Fields top(doc, "");
  std::string network, train, eval, test, out = ".";
  top.get("network", network);
  top.get("output_dir", out);
  top.get("seed", c.seed);
  if (seed_override) c.seed = *seed_override;

  if (const json* d = top.find("data")) {
    Fields f(*d, "data");
    f.get("train", train);
    f.get("eval", eval);
    f.get("test", test);
    f.finish();
  }
  if (const json* s = top.find("scenario")) {
    Fields f(*s, "scenario");
    f.get("dt_hours", c.scenario.dt_hours);
    f.get("horizon_hours", c.scenario.horizon_hours);
    f.get("curtail_price", c.scenario.curtail_price);
    f.get("penalty_price", c.scenario.penalty_price);
    f.finish();
  }
  if (const json* e = top.find("env")) {
    Fields f(*e, "env");
    f.get("levels", c.env.levels);
    f.get("history_hours", c.env.history_hours);
    f.get("solar_scale_kw", c.env.solar_scale_kw);
    f.get("wind_scale_kw", c.env.wind_scale_kw);
    f.get("load_scale_kw", c.env.load_scale_kw);
    f.get("price_scale", c.env.price_scale);
    f.finish();
  }
  if (const json* a = top.find("agent")) {
    Fields f(*a, "agent");
    detail::read_agent_hyper(f, c.agent);
    f.finish();
  }
  if (const json* t = top.find("train")) {
    Fields f(*t, "train");
    f.get("episodes", c.train.episodes);
    f.get("train_freq", c.train.train_freq);
    f.get("batch", c.train.batch);
    f.get("lr", c.train.lr);
    f.get("target_sync", c.train.target_sync);
    f.get("eval_period", c.train.eval_period);
    f.get("reward_scale", c.train.reward_scale);
    f.get("beta_start", c.train.beta_start);
    f.get("beta_end", c.train.beta_end);
    f.get("max_failure_fraction", c.train.max_failure_fraction);
    f.finish();
  }
  c.train.seed = c.seed;
  if (const json* r = top.find("replay")) {
    Fields f(*r, "replay");
    f.get("capacity", c.replay.capacity);
    f.get("alpha", c.replay.alpha);
    f.get("eps_p", c.replay.eps_p);
    f.finish();
  }
  if (const json* s = top.find("solver")) {
    Fields f(*s, "solver");
    f.get("tol", c.solver.tol);
    f.get("max_iterations", c.solver.max_iterations);
    f.get("static_reg", c.solver.static_reg);
    f.get("refinement_steps", c.solver.refinement_steps);
    f.get("reduced_tol", c.solver.reduced_tol);
    f.finish();
  }
  if (const json* d = top.find("dp")) {
    Fields f(*d, "dp");
    f.get("soc_levels", c.dp.soc_levels);
    f.get("budget", c.dp.budget);
    f.finish();
  }
  json profile = json::object();
  if (const json* p = top.find("profile")) profile = profile_overrides(*p, "profile");
  top.finish();

  c.scenario.validate();
  validate_env(c.env);
  c.train.validate();
  validate_solver(c.solver);
  if (c.replay.capacity == 0 || !(c.replay.alpha >= 0.0) || !(c.replay.eps_p > 0.0)) {
    throw ValidationError("replay needs capacity >= 1, alpha >= 0 and eps_p > 0");
  }
  if (c.dp.soc_levels < 2 || !(c.dp.budget > 0.0)) {
    throw ValidationError("dp needs soc_levels >= 2 and a positive budget");
  }
  {
    AgentConfig probe = c.agent;
    probe.validate();
  }

  c.network = resolve(base_dir, network);
  c.train_data = resolve(base_dir, train);
  c.eval_data = resolve(base_dir, eval);
  c.test_data = resolve(base_dir, test);
  c.output_dir = resolve(base_dir, out);
  check_exists("network", c.network);
  check_exists("data.train", c.train_data);
  check_exists("data.eval", c.eval_data);
  check_exists("data.test", c.test_data);
  c.profile_json = profile.dump();

  const json canonical{
      {"network", network},
      {"data", {{"train", train}, {"eval", eval}, {"test", test}}},
      {"seed", c.seed},
      {"scenario",
       {{"dt_hours", c.scenario.dt_hours},
        {"horizon_hours", c.scenario.horizon_hours},
        {"curtail_price", c.scenario.curtail_price},
        {"penalty_price", c.scenario.penalty_price}}},
      {"env",
       {{"levels", c.env.levels},
        {"history_hours", c.env.history_hours},
        {"solar_scale_kw", c.env.solar_scale_kw},
        {"wind_scale_kw", c.env.wind_scale_kw},
        {"load_scale_kw", c.env.load_scale_kw},
        {"price_scale", c.env.price_scale}}},
      {"agent", detail::agent_hyper_json(c.agent)},
      {"train",
       {{"episodes", c.train.episodes},
        {"train_freq", c.train.train_freq},
        {"batch", c.train.batch},
        {"lr", c.train.lr},
        {"target_sync", c.train.target_sync},
        {"eval_period", c.train.eval_period},
        {"reward_scale", c.train.reward_scale},
        {"beta_start", c.train.beta_start},
        {"beta_end", c.train.beta_end},
        {"max_failure_fraction", c.train.max_failure_fraction}}},
      {"replay",
       {{"capacity", c.replay.capacity}, {"alpha", c.replay.alpha}, {"eps_p", c.replay.eps_p}}},
      {"solver",
       {{"tol", c.solver.tol},
        {"max_iterations", c.solver.max_iterations},
        {"static_reg", c.solver.static_reg},
        {"refinement_steps", c.solver.refinement_steps},
        {"reduced_tol", c.solver.reduced_tol}}},
      {"dp", {{"soc_levels", c.dp.soc_levels}, {"budget", c.dp.budget}}},
      {"profile", profile},
  };
  c.canonical = canonical.dump();
  c.hash = fnv1a_hex(c.canonical);
  return c;
}

RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("config: cannot open {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  const fs::path parent = fs::path(path).parent_path();
  return parse_run_config(ss.str(), parent.empty() ? "." : parent.string(), seed_override);
}

const std::string& require_path(const RunConfig& config, const std::string& key) {
  const std::string* p = nullptr;
  if (key == "network") p = &config.network;
  else if (key == "data.train") p = &config.train_data;
  else if (key == "data.eval") p = &config.eval_data;
  else if (key == "data.test") p = &config.test_data;
  else throw ConfigError("unknown path key " + key);
  if (p->empty()) throw ConfigError(key + ": required path is missing from the config");
  check_exists(key, *p);
  return *p;
}

MicrogridEnv make_env(const RunConfig& config) {
  return MicrogridEnv(load_network(require_path(config, "network")), config.scenario, config.env);
}

AgentConfig agent_for(const RunConfig& config, const MicrogridEnv& env) {
  const AgentConfig sizes = agent_config_for(env);
  AgentConfig c = config.agent;
  c.branches = sizes.branches;
  c.levels = sizes.levels;
  c.window = sizes.window;
  c.scalar_features = sizes.scalar_features;
  c.validate();
  return c;
}

SynthProfile synth_profile(const RunConfig& config, const MicrogridEnv& env) {
  SynthProfile p = profile_for(env.devices(), env.scenario());
  const json overrides = json::parse(config.profile_json);
  for (const auto& pf : kProfileFields) {
    if (auto it = overrides.find(pf.key); it != overrides.end()) p.*pf.member = it->get<double>();
  }
  return p;
}

}  // namespace branchgrid::cli

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


#include "branchgrid/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include <fmt/format.h>

#include "branchgrid/errors.hpp"

namespace branchgrid {

void TrainConfig::validate() const {
  if (episodes < 1 || train_freq < 1 || batch < 1 || target_sync < 1 || eval_period < 1) {
    throw ValidationError("training counts must all be at least 1");
  }
  if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(reward_scale > 0.0)) throw ValidationError("reward_scale must be positive");
  if (!(beta_start >= 0.0 && beta_end >= 0.0)) throw ValidationError("beta must be non-negative");
  if (!(max_failure_fraction >= 0.0)) throw ValidationError("failure fraction must be >= 0");
}

std::string TrainLog::to_csv() const {
  std::string out = "episode,step,epsilon,loss,episode_return,eval_return\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.17g},{},{:.17g},{}\n", r.episode, r.step, r.epsilon,
                       r.loss ? fmt::format("{:.17g}", *r.loss) : std::string(),
                       r.episode_return,
                       r.eval_return ? fmt::format("{:.17g}", *r.eval_return) : std::string());
  }
  return out;
}

std::vector<double> BdqPolicy::decide(const MicrogridEnv& env, const EnvState& state) {
  std::mt19937_64 unused(0);
  return env.actions().to_kw(select_action(net_.q_values(env.observe(state)), 0.0, unused));
}

double evaluate(const MicrogridEnv& env, Policy& policy, const std::vector<ExogenousDay>& days,
                const SolverOptions& options) {
  if (days.empty()) throw ValidationError("evaluation needs at least one day");
  double total = 0.0;
  for (const auto& d : days) total += rollout(env, d, policy, options).ret;
  return total / static_cast<double>(days.size());
}

double evaluate(const MicrogridEnv& env, const BdqNetwork& agent,
                const std::vector<ExogenousDay>& days, const SolverOptions& options) {
  BdqPolicy p(agent);
  return evaluate(env, p, days, options);
}

TrainLog train(const MicrogridEnv& env, const std::vector<ExogenousDay>& train_days,
               const std::vector<ExogenousDay>& eval_days, BdqNetwork& agent,
               PrioritizedReplay& replay, const TrainConfig& cfg, const TrainHooks& hooks,
               const SolverOptions& options) {
  cfg.validate();
  if (train_days.empty()) throw ValidationError("training dataset is empty");
  std::set<int> ids;
  for (const auto& d : train_days) {
    check_day_compatible(d, env.devices(), env.scenario());
    ids.insert(d.day_id);
  }
  for (const auto& d : eval_days) {
    if (ids.count(d.day_id)) {
      throw ValidationError(fmt::format("evaluation day {} is also a training day", d.day_id));
    }
  }
  const AgentConfig& ac = agent.config();
  if (ac.branches != env.actions().branches() || ac.levels != env.actions().levels() ||
      ac.window != env.window() || ac.scalar_features != env.scalar_features()) {
    throw ValidationError(fmt::format(
        "agent (N={}, n={}, H={}) does not match environment (N={}, n={}, H={})", ac.branches,
        ac.levels, ac.window, env.actions().branches(), env.actions().levels(), env.window()));
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_day(0, train_days.size() - 1);
  TargetNetwork target(agent);
  diff::AdamConfig adam;
  adam.lr = cfg.lr;
  TrainLog log;
  const double planned_steps = static_cast<double>(cfg.episodes) * static_cast<double>(env.steps());
  const auto t0 = std::chrono::steady_clock::now();

  for (std::int64_t ep = 0; ep < cfg.episodes; ++ep) {
    const ExogenousDay& day = train_days[pick_day(rng)];
    TrainLogRow row;
    row.episode = ep;
    double loss_sum = 0.0;
    std::int64_t loss_n = 0;
    try {
      EnvState s = env.reset(day);
      Observation obs = env.observe(s);
      for (std::size_t t = 0; t < env.steps(); ++t) {
        const double eps = ac.epsilon(log.env_steps);
        const auto levels = select_action(agent.q_values(obs), eps, rng);
        StepOutcome o = env.step(s, levels, options);
        row.episode_return += o.reward;
        Observation next = env.observe(o.next);
        replay.push({obs, levels, o.reward * cfg.reward_scale, next, o.terminal});
        ++log.env_steps;
        s = std::move(o.next);
        obs = std::move(next);

        if (log.env_steps % cfg.train_freq == 0) {
          const std::size_t k = std::min(cfg.batch, replay.size());
          const double beta = anneal_beta(cfg.beta_start, cfg.beta_end,
                                          static_cast<double>(log.env_steps) / planned_steps);
          const ReplaySample smp = replay.sample(k, beta, rng);
          const LossResult lr = loss_and_grads(smp.batch, smp.weights, agent, target.net, ac.gamma);
          diff::adam_step(agent.params(), adam);
          std::vector<double> td(lr.td_errors.data(), lr.td_errors.data() + lr.td_errors.size());
          replay.update_priorities(smp.indices, td);
          ++log.grad_steps;
          log.losses.push_back(lr.loss);
          loss_sum += lr.loss;
          ++loss_n;
          if (log.grad_steps % cfg.target_sync == 0) {
            target.sync(agent, log.grad_steps);
            if (hooks.on_sync) hooks.on_sync(log.grad_steps, target.net.params());
          }
        }
      }
    } catch (const NumericalFailure&) {
      row.failed = true;
      ++log.failures;
      if (static_cast<double>(log.failures) >
          cfg.max_failure_fraction * static_cast<double>(cfg.episodes)) {
        throw TrainingAborted(fmt::format("{} of {} episodes hit solver failures", log.failures,
                                          ep + 1));
      }
    }
    row.step = log.env_steps;
    row.epsilon = ac.epsilon(log.env_steps);
    if (loss_n > 0) row.loss = loss_sum / static_cast<double>(loss_n);
    if (!eval_days.empty() && (ep + 1) % cfg.eval_period == 0) {
      row.eval_return = evaluate(env, agent, eval_days, options);
    }
    log.rows.push_back(row);
    log.wall_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (hooks.on_episode) hooks.on_episode(row);
  }
  return log;
}

}  // namespace branchgrid

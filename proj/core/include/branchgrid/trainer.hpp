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


// Episode loop for the branching Q-learner: epsilon-greedy rollouts on
// random training days, prioritized replay, Adam updates every
// `train_freq` environment steps, periodic target sync and evaluation.

#ifndef BRANCHGRID_TRAINER_HPP_
#define BRANCHGRID_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "branchgrid/agent.hpp"
#include "branchgrid/baselines.hpp"
#include "branchgrid/diffcore.hpp"
#include "branchgrid/env.hpp"
#include "branchgrid/replay.hpp"

namespace branchgrid {

struct TrainConfig {
  std::int64_t episodes = 5000;
  std::int64_t train_freq = 1;  // env steps per gradient step
  std::size_t batch = 64;
  double lr = 1e-4;
  std::int64_t target_sync = 1000;  // gradient steps
  std::int64_t eval_period = 500;   // episodes
  std::uint64_t seed = 0;
  // Multiplies rewards before they reach replay; logged returns stay in $.
  double reward_scale = 1.0;
  double beta_start = 0.4;
  double beta_end = 1.0;
  double max_failure_fraction = 0.01;

  void validate() const;  // throws ValidationError
};

struct TrainLogRow {
  std::int64_t episode = 0;
  std::int64_t step = 0;  // cumulative env steps at episode end
  double epsilon = 0.0;
  std::optional<double> loss;  // mean over the episode's gradient steps
  double episode_return = 0.0;
  std::optional<double> eval_return;
  bool failed = false;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  std::vector<double> losses;  // one per gradient step
  std::int64_t env_steps = 0;
  std::int64_t grad_steps = 0;
  std::int64_t failures = 0;
  std::vector<double> wall_seconds;  // per episode, not serialised

  // `episode,step,epsilon,loss,episode_return,eval_return`; empty cells for
  // missing values.
  std::string to_csv() const;
};

// Raised when solver failures exceed the allowed episode fraction.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Greedy policy over a network's Q-values.
class BdqPolicy : public Policy {
 public:
  explicit BdqPolicy(const BdqNetwork& net) : net_(net) {}
  std::string name() const override { return "bdq"; }
  std::vector<double> decide(const MicrogridEnv& env, const EnvState& state) override;

 private:
  const BdqNetwork& net_;
};

// Mean episode return over `days` with no exploration. Throws
// ValidationError on an empty day set.
double evaluate(const MicrogridEnv& env, Policy& policy, const std::vector<ExogenousDay>& days,
                const SolverOptions& options = {});
double evaluate(const MicrogridEnv& env, const BdqNetwork& agent,
                const std::vector<ExogenousDay>& days, const SolverOptions& options = {});

struct TrainHooks {
  std::function<void(const TrainLogRow&)> on_episode;
  // Called after every target sync with (grad_steps, target values).
  std::function<void(std::int64_t, const diff::ParamStore&)> on_sync;
};

// Trains `agent` in place. Evaluation days must not share a day_id with
// training days.
TrainLog train(const MicrogridEnv& env, const std::vector<ExogenousDay>& train_days,
               const std::vector<ExogenousDay>& eval_days, BdqNetwork& agent,
               PrioritizedReplay& replay, const TrainConfig& config, const TrainHooks& hooks = {},
               const SolverOptions& options = {});

}  // namespace branchgrid

#endif  // BRANCHGRID_TRAINER_HPP_

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


// Reference policies and day-level oracles, plus the rollout loop shared
// with the learner's evaluation.

#ifndef BRANCHGRID_BASELINES_HPP_
#define BRANCHGRID_BASELINES_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "branchgrid/env.hpp"

namespace branchgrid {

// Maps a state to requested BESS powers (kW, + discharge); the
// environment clips them.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> decide(const MicrogridEnv& env, const EnvState& state) = 0;
};

struct EpisodeResult {
  double cost = 0.0;
  double ret = 0.0;  // -cost
  std::vector<std::vector<double>> bess_kw;  // per step, after clipping
  std::vector<double> stage_cost;
};

EpisodeResult rollout(const MicrogridEnv& env, const ExogenousDay& day, Policy& policy,
                      const SolverOptions& options = {});

// Single-period OPF with the BESS powers free inside the clip limits.
std::vector<double> myopic_decide(const MicrogridEnv& env, const EnvState& state,
                                  const SolverOptions& options = {});

class MyopicPolicy : public Policy {
 public:
  explicit MyopicPolicy(SolverOptions options = {}) : options_(options) {}
  std::string name() const override { return "myopic"; }
  std::vector<double> decide(const MicrogridEnv& env, const EnvState& state) override {
    return myopic_decide(env, state, options_);
  }

 private:
  SolverOptions options_;
};

std::vector<std::size_t> random_policy(const ActionSpace& actions, std::mt19937_64& rng);

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  std::vector<double> decide(const MicrogridEnv& env, const EnvState& state) override;

 private:
  std::mt19937_64 rng_;
};

struct DpOptions {
  std::size_t soc_levels = 41;
  // Guard on soc_levels^N * n * N.
  double budget = 1e6;
};

struct DpResult {
  double cost = 0.0;  // optimum of the discretised problem
  // Greedy action per (t, joint grid state), used for closed-loop replay.
  std::vector<std::vector<std::vector<std::size_t>>> policy;
  std::vector<std::vector<double>> soc_grid;  // per device
  std::vector<std::vector<std::size_t>> schedule;  // open-loop from soc_init
  std::size_t stage_solves = 0;
};

// Backward DP over time x joint SoC grid with the agent's action set; SoC
// transitions snap to the nearest grid point and stage costs come from
// single-period OPF solves without DG ramp coupling. Throws
// ValidationError when the budget is exceeded.
DpResult dp_oracle(const MicrogridEnv& env, const ExogenousDay& day, const DpOptions& dp = {},
                   const SolverOptions& options = {});

// Closed-loop replay of a DP table: snap the live SoC, look up the action.
class DpPolicy : public Policy {
 public:
  explicit DpPolicy(DpOptions dp = {}, SolverOptions options = {}) : dp_(dp), options_(options) {}
  std::string name() const override { return "dp_oracle"; }
  std::vector<double> decide(const MicrogridEnv& env, const EnvState& state) override;
  const DpResult& table_for(const MicrogridEnv& env, const ExogenousDay& day);

 private:
  DpOptions dp_;
  SolverOptions options_;
  std::map<const ExogenousDay*, DpResult> tables_;
};

// Perfect-information multi-period relaxation cost: a lower bound on every
// policy's day cost.
double relaxed_oracle(const MicrogridEnv& env, const ExogenousDay& day,
                      const SolverOptions& options = {});

// 100 (myopic - policy) / myopic. Throws ValidationError unless myopic > 0.
double improvement_vs_myopic(double policy_cost, double myopic_cost);

}  // namespace branchgrid

#endif  // BRANCHGRID_BASELINES_HPP_

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


#include "branchgrid/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "branchgrid/errors.hpp"
#include "branchgrid/opf.hpp"

namespace branchgrid {

EpisodeResult rollout(const MicrogridEnv& env, const ExogenousDay& day, Policy& policy,
                      const SolverOptions& options) {
  EpisodeResult out;
  EnvState s = env.reset(day);
  for (std::size_t t = 0; t < env.steps(); ++t) {
    StepOutcome o = env.step_powers(s, policy.decide(env, s), options);
    const double c = o.solution.cost.total();
    out.cost += c;
    out.stage_cost.push_back(c);
    out.bess_kw.push_back(o.bess_kw);
    s = std::move(o.next);
  }
  out.ret = -out.cost;
  return out;
}

std::vector<double> myopic_decide(const MicrogridEnv& env, const EnvState& state,
                                  const SolverOptions& options) {
  if (!state.day || state.t >= env.steps()) {
    throw ValidationError("myopic decision needs a non-terminal state");
  }
  const std::size_t n = env.devices().bess.size();
  OpfInstance in = make_instance(*state.day, state.t, env.topology(), env.devices(),
                                 std::vector<double>(n, 0.0), state.prev_dg_kw);
  in.bess_free = true;
  for (std::size_t d = 0; d < n; ++d) {
    in.bess_charge_limit_kw.push_back(env.charge_limit_kw(d, state.soc[d]));
    in.bess_discharge_limit_kw.push_back(env.discharge_limit_kw(d, state.soc[d]));
  }
  const OpfSolution sol = solve_opf(in, env.topology(), env.devices(), env.scenario(), options);
  std::vector<double> kw(n);
  for (std::size_t d = 0; d < n; ++d) {
    kw[d] = std::clamp(sol.bess_discharge_kw[d] - sol.bess_charge_kw[d],
                       -in.bess_charge_limit_kw[d], in.bess_discharge_limit_kw[d]);
  }
  return kw;
}

std::vector<std::size_t> random_policy(const ActionSpace& actions, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> u(0, actions.levels() - 1);
  std::vector<std::size_t> out(actions.branches());
  for (auto& a : out) a = u(rng);
  return out;
}

std::vector<double> RandomPolicy::decide(const MicrogridEnv& env, const EnvState&) {
  return env.actions().to_kw(random_policy(env.actions(), rng_));
}

namespace {

std::size_t nearest(const std::vector<double>& grid, double v) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), v);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return grid.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
  return (v - grid[hi - 1] <= grid[hi] - v) ? hi - 1 : hi;
}

// Mixed-radix decode of a joint index.
void decode(std::size_t index, std::size_t radix, std::vector<std::size_t>& digits) {
  for (auto& d : digits) {
    d = index % radix;
    index /= radix;
  }
}

std::size_t encode(const std::vector<std::size_t>& digits, std::size_t radix) {
  std::size_t index = 0;
  for (std::size_t k = digits.size(); k-- > 0;) index = index * radix + digits[k];
  return index;
}

}  // namespace

DpResult dp_oracle(const MicrogridEnv& env, const ExogenousDay& day, const DpOptions& dp,
                   const SolverOptions& options) {
  check_day_compatible(day, env.devices(), env.scenario());
  const auto& bess = env.devices().bess;
  const std::size_t N = bess.size();
  const std::size_t L = dp.soc_levels;
  const std::size_t n = env.actions().levels();
  const std::size_t T = env.steps();
  if (N == 0) throw ValidationError("dp oracle needs at least one BESS");
  if (L < 2) throw ValidationError("dp oracle needs at least two SoC levels");
  const double load = std::pow(static_cast<double>(L), static_cast<double>(N)) *
                      static_cast<double>(n * N);
  if (load > dp.budget) {
    throw ValidationError(fmt::format(
        "dp oracle state-action size {} exceeds budget {}", load, dp.budget));
  }
  std::size_t states = 1, joint_actions = 1;
  for (std::size_t d = 0; d < N; ++d) {
    states *= L;
    joint_actions *= n;
  }

  DpResult res;
  for (const auto& b : bess) {
    std::vector<double> g(L);
    for (std::size_t k = 0; k < L; ++k) {
      g[k] = b.soc_min + (b.soc_max - b.soc_min) * static_cast<double>(k) / static_cast<double>(L - 1);
    }
    res.soc_grid.push_back(std::move(g));
  }

  std::map<std::pair<std::size_t, std::vector<double>>, double> memo;
  auto stage_cost = [&](std::size_t t, const std::vector<double>& kw) {
    auto key = std::make_pair(t, kw);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const OpfInstance in = make_instance(day, t, env.topology(), env.devices(), kw);
    const double c = solve_opf(in, env.topology(), env.devices(), env.scenario(), options).cost.total();
    ++res.stage_solves;
    memo.emplace(std::move(key), c);
    return c;
  };

  std::vector<double> value(states, 0.0), next_value(states, 0.0);
  res.policy.assign(T, std::vector<std::vector<std::size_t>>(states));
  std::vector<std::size_t> sd(N), ad(N), nd(N);
  EnvState probe;
  probe.soc.resize(N);
  for (std::size_t t = T; t-- > 0;) {
    next_value.swap(value);
    for (std::size_t s = 0; s < states; ++s) {
      decode(s, L, sd);
      for (std::size_t d = 0; d < N; ++d) probe.soc[d] = res.soc_grid[d][sd[d]];
      double best = std::numeric_limits<double>::infinity();
      std::vector<std::size_t> best_a(N, 0);
      for (std::size_t a = 0; a < joint_actions; ++a) {
        decode(a, n, ad);
        const std::vector<double> kw = env.feasible_clip(ad, probe);
        for (std::size_t d = 0; d < N; ++d) {
          nd[d] = nearest(res.soc_grid[d], env.next_soc(d, probe.soc[d], kw[d]));
        }
        const double v = stage_cost(t, kw) + next_value[encode(nd, L)];
        if (v < best) {
          best = v;
          best_a = ad;
        }
      }
      value[s] = best;
      res.policy[t][s] = best_a;
    }
  }
  for (std::size_t d = 0; d < N; ++d) sd[d] = nearest(res.soc_grid[d], bess[d].soc_init);
  res.cost = value[encode(sd, L)];
  for (std::size_t t = 0; t < T; ++t) {
    const auto& a = res.policy[t][encode(sd, L)];
    res.schedule.push_back(a);
    for (std::size_t d = 0; d < N; ++d) probe.soc[d] = res.soc_grid[d][sd[d]];
    const std::vector<double> kw = env.feasible_clip(a, probe);
    for (std::size_t d = 0; d < N; ++d) {
      sd[d] = nearest(res.soc_grid[d], env.next_soc(d, probe.soc[d], kw[d]));
    }
  }
  return res;
}

const DpResult& DpPolicy::table_for(const MicrogridEnv& env, const ExogenousDay& day) {
  auto it = tables_.find(&day);
  if (it == tables_.end()) it = tables_.emplace(&day, dp_oracle(env, day, dp_, options_)).first;
  return it->second;
}

std::vector<double> DpPolicy::decide(const MicrogridEnv& env, const EnvState& state) {
  if (!state.day) throw ValidationError("state has no day attached");
  const DpResult& r = table_for(env, *state.day);
  std::size_t index = 0;
  for (std::size_t d = state.soc.size(); d-- > 0;) {
    index = index * dp_.soc_levels + nearest(r.soc_grid[d], state.soc[d]);
  }
  return env.actions().to_kw(r.policy[state.t][index]);
}

double relaxed_oracle(const MicrogridEnv& env, const ExogenousDay& day,
                      const SolverOptions& options) {
  check_day_compatible(day, env.devices(), env.scenario());
  return solve_multiperiod(day, env.topology(), env.devices(), env.scenario(), options).total_cost;
}

double improvement_vs_myopic(double policy_cost, double myopic_cost) {
  if (!(myopic_cost > 0.0)) {
    throw ValidationError(fmt::format("myopic cost must be positive, got {}", myopic_cost));
  }
  return 100.0 * (myopic_cost - policy_cost) / myopic_cost;
}

}  // namespace branchgrid

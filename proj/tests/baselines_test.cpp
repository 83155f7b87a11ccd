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

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "branchgrid/errors.hpp"
#include "branchgrid/opf.hpp"
#include "stats_util.hpp"

namespace branchgrid {
namespace {

const std::string kData = BRANCHGRID_DATA_DIR;

NetworkFile storage_bus(double e_cap, double p_max, double soc_min, double soc_max,
                        double soc_init, double k_b, double eta = 1.0) {
  NetworkFile net;
  net.topology = make_topology({{0, 0.9, 1.1}}, {}, 0, 1000.0, 0.4);
  net.devices.p_grid_max = 1000.0;
  net.devices.loads.push_back({0, 0.0, 100.0});
  net.devices.bess.push_back({0, e_cap, p_max, eta, eta, soc_min, soc_max, soc_init, k_b});
  return net;
}

ExogenousDay price_day(std::vector<double> buy, double load_kw, double sell_ratio = 0.0) {
  ExogenousDay d;
  d.load[0] = std::vector<double>(buy.size(), load_kw);
  for (double b : buy) d.price_sell.push_back(sell_ratio * b);
  d.price_buy = std::move(buy);
  return d;
}

ScenarioConfig horizon(double hours) {
  ScenarioConfig c;
  c.horizon_hours = hours;
  return c;
}

EnvConfig levels(std::size_t n) {
  EnvConfig c;
  c.levels = n;
  c.history_hours = 1.0;
  return c;
}

TEST(Myopic, IdleAtSocMinUnderConstantPrices) {
  MicrogridEnv env(storage_bus(400, 100, 0.1, 0.9, 0.1, 0.01), horizon(24), levels(11));
  const auto day = price_day(std::vector<double>(24, 0.2), 100.0, 0.6);
  MyopicPolicy p;
  const auto r = rollout(env, day, p);
  for (const auto& kw : r.bess_kw) EXPECT_NEAR(kw[0], 0.0, 1e-4);
  EXPECT_NEAR(r.cost, 24 * 0.2 * 100.0, 1e-3);
}

TEST(Myopic, DischargesAtLimitWhenSellingPays) {
  // Zero load: every discharged kWh is sold at 0.15 against k_b = 0.01.
  MicrogridEnv env(storage_bus(400, 100, 0.1, 0.9, 0.9, 0.01), horizon(1), levels(3));
  const auto day = price_day({0.25}, 0.0, 0.6);
  const EnvState s = env.reset(day);
  const double limit = env.discharge_limit_kw(0, s.soc[0]);
  const auto kw = myopic_decide(env, s);
  EXPECT_NEAR(kw[0], limit, 1e-3);

  double best_kw = -1.0, best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 20; ++k) {
    const double p = limit * k / 20.0;
    const auto in = make_instance(day, 0, env.topology(), env.devices(), {p});
    const double c = solve_opf(in, env.topology(), env.devices(), env.scenario()).cost.total();
    if (c < best) {
      best = c;
      best_kw = p;
    }
  }
  EXPECT_NEAR(best_kw, limit, 1e-9);
}

TEST(Myopic, NoChargingAtSocMin) {
  MicrogridEnv env(storage_bus(400, 100, 0.1, 0.9, 0.1, 0.01), horizon(1), levels(3));
  const auto day = price_day({0.05}, 100.0, 0.6);
  const auto kw = myopic_decide(env, env.reset(day));
  EXPECT_NEAR(kw[0], 0.0, 1e-3);
}

// Exhaustive search over all level sequences with the DP's snapped
// dynamics, summing stage costs from the last step backwards.
double enumerate_best(const MicrogridEnv& env, const ExogenousDay& day,
                      const std::vector<double>& grid) {
  const std::size_t T = env.steps(), n = env.actions().levels();
  std::size_t combos = 1;
  for (std::size_t t = 0; t < T; ++t) combos *= n;
  auto snap = [&](double v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
      if (std::abs(grid[k] - v) < std::abs(grid[best] - v)) best = k;
    }
    return grid[best];
  };
  double best = std::numeric_limits<double>::infinity();
  std::size_t visited = 0;
  for (std::size_t c = 0; c < combos; ++c) {
    std::vector<double> stage(T);
    EnvState s;
    s.soc = {snap(env.devices().bess[0].soc_init)};
    std::size_t code = c;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t level = code % n;
      code /= n;
      const auto kw = env.feasible_clip({level}, s);
      const auto in = make_instance(day, t, env.topology(), env.devices(), kw);
      stage[t] = solve_opf(in, env.topology(), env.devices(), env.scenario()).cost.total();
      s.soc[0] = snap(env.next_soc(0, s.soc[0], kw[0]));
    }
    double total = 0.0;
    for (std::size_t t = T; t-- > 0;) total = stage[t] + total;
    best = std::min(best, total);
    ++visited;
  }
  EXPECT_EQ(visited, 81u);
  return best;
}

TEST(DpOracle, EqualsExhaustiveEnumeration) {
  MicrogridEnv env(storage_bus(100, 25, 0.0, 1.0, 0.5, 0.002), horizon(4), levels(3));
  const auto day = price_day({0.30, 0.05, 0.10, 0.40}, 40.0, 0.5);
  DpOptions dp;
  dp.soc_levels = 5;
  const auto r = dp_oracle(env, day, dp);
  EXPECT_EQ(r.cost, enumerate_best(env, day, r.soc_grid[0]));
  EXPECT_EQ(r.schedule.size(), 4u);
}

TEST(DpOracle, RefinementBeyondAlignedGridIsStable) {
  MicrogridEnv env(storage_bus(100, 25, 0.0, 1.0, 0.5, 0.002), horizon(4), levels(3));
  const auto day = price_day({0.30, 0.05, 0.10, 0.40}, 40.0, 0.5);
  DpOptions coarse, fine;
  coarse.soc_levels = 5;
  fine.soc_levels = 9;
  const double a = dp_oracle(env, day, coarse).cost;
  const double b = dp_oracle(env, day, fine).cost;
  EXPECT_LE(std::abs(a - b), 0.005 * std::abs(a));
}

TEST(DpOracle, ConstantPricesIdleAndMatchMyopic) {
  MicrogridEnv env(storage_bus(400, 100, 0.1, 0.9, 0.1, 0.01), horizon(24), levels(11));
  const auto day = price_day(std::vector<double>(24, 0.2), 100.0, 0.6);
  // 0.05 SoC spacing matches one 20 kW level for an hour, so snapping is exact.
  DpOptions dp;
  dp.soc_levels = 17;
  const auto r = dp_oracle(env, day, dp);
  for (const auto& a : r.schedule) EXPECT_EQ(a[0], env.actions().idle_level());
  MyopicPolicy m;
  const double myopic = rollout(env, day, m).cost;
  EXPECT_NEAR(r.cost, myopic, 1e-6 * myopic);
  EXPECT_NEAR(relaxed_oracle(env, day), myopic, 1e-6 * myopic);
}

TEST(DpOracle, TwoTierDayArbitrages) {
  std::vector<double> buy(24, 0.08);
  for (int h = 8; h < 22; ++h) buy[static_cast<std::size_t>(h)] = 0.25;
  const auto day = price_day(buy, 100.0, 0.6);
  MicrogridEnv env(storage_bus(400, 100, 0.1, 0.9, 0.5, 0.005), horizon(24), levels(11));
  DpOptions dp;
  dp.soc_levels = 41;
  const auto r = dp_oracle(env, day, dp);
  double night_charge = 0.0, day_discharge = 0.0;
  for (std::size_t t = 0; t < 24; ++t) {
    const double kw = env.actions().level_kw(0, r.schedule[t][0]);
    if (buy[t] < 0.1 && kw < 0.0) night_charge -= kw;
    if (buy[t] > 0.1 && kw > 0.0) day_discharge += kw;
    if (buy[t] < 0.1) EXPECT_LE(kw, 0.0) << t;
  }
  EXPECT_GT(night_charge, 100.0);
  EXPECT_GT(day_discharge, 100.0);
  MyopicPolicy m;
  DpPolicy closed(dp);
  const double myopic = rollout(env, day, m).cost;
  const double executed = rollout(env, day, closed).cost;
  EXPECT_LE(r.cost, myopic);
  EXPECT_LE(executed, myopic);
  EXPECT_LE(relaxed_oracle(env, day), executed + 1e-6);
}

TEST(DpOracle, BudgetGuard) {
  const auto net = load_network(kData + "/networks/ieee33.json");
  MicrogridEnv env(net, ScenarioConfig{}, EnvConfig{});
  const auto days = synth_dataset(1, 1, profile_for(net.devices, ScenarioConfig{}));
  EXPECT_THROW(dp_oracle(env, days[0]), ValidationError);
}

TEST(Baselines, OrderingOnSyntheticDays) {
  const auto net = load_network(kData + "/networks/single_bus.json");
  ScenarioConfig cfg;
  MicrogridEnv env(net, cfg, EnvConfig{});
  const auto days = synth_dataset(31, 4, profile_for(net.devices, cfg));
  DpPolicy dp;
  MyopicPolicy my;
  for (const auto& d : days) {
    const double relaxed = relaxed_oracle(env, d);
    const double oracle = rollout(env, d, dp).cost;
    const double myopic = rollout(env, d, my).cost;
    EXPECT_LE(relaxed, oracle + 1e-6);
    EXPECT_LT(oracle, myopic);
  }
}

TEST(Relaxed, ZeroLoadZeroPriceCostsFixedTerms) {
  auto net = storage_bus(400, 100, 0.1, 0.9, 0.5, 0.01);
  net.devices.dgs.push_back({0, 0.0, 50.0, -20.0, 20.0, 50.0, 0.0, 0.1, 2.0});
  MicrogridEnv env(net, horizon(24), levels(3));
  const auto day = price_day(std::vector<double>(24, 0.0), 0.0);
  EXPECT_NEAR(relaxed_oracle(env, day), 2.0 * 24, 1e-4);
}

TEST(RandomPolicy, SeedDeterministicAndUniform) {
  const auto net = load_network(kData + "/networks/single_bus.json");
  const ActionSpace a(net.devices, 11);
  std::mt19937_64 r1(5), r2(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(random_policy(a, r1), random_policy(a, r2));
  std::vector<double> counts(11, 0.0);
  for (int i = 0; i < 100000; ++i) {
    const auto l = random_policy(a, r1);
    ASSERT_EQ(l.size(), 1u);
    ASSERT_LT(l[0], 11u);
    counts[l[0]] += 1.0;
  }
  EXPECT_GT(testing::chi_square_p(counts, std::vector<double>(11, 1.0 / 11.0)), 0.01);
}

TEST(Improvement, Arithmetic) {
  EXPECT_DOUBLE_EQ(improvement_vs_myopic(90.0, 100.0), 10.0);
  EXPECT_DOUBLE_EQ(improvement_vs_myopic(100.0, 100.0), 0.0);
  EXPECT_NEAR(improvement_vs_myopic(108.41, 100.0), -8.41, 1e-12);
  EXPECT_THROW(improvement_vs_myopic(1.0, 0.0), ValidationError);
  EXPECT_THROW(improvement_vs_myopic(1.0, -5.0), ValidationError);
}

}  // namespace
}  // namespace branchgrid

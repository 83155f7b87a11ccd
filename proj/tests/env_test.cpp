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


#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "branchgrid/env.hpp"
#include "branchgrid/errors.hpp"

namespace branchgrid {
namespace {

const std::string kData = BRANCHGRID_DATA_DIR;

NetworkFile one_bess_bus(double eta_ch, double eta_dis) {
  NetworkFile net;
  net.topology = make_topology({{0, 0.9, 1.1}}, {}, 0, 1000.0, 12.66);
  net.devices.p_grid_max = 1000.0;
  net.devices.loads.push_back({0, 0.0, 50.0});
  net.devices.bess.push_back({0, 100.0, 50.0, eta_ch, eta_dis, 0.1, 0.9, 0.5, 0.0});
  return net;
}

ExogenousDay flat_day(std::size_t steps, double load, double buy) {
  ExogenousDay d;
  d.load[0] = std::vector<double>(steps, load);
  d.price_buy = std::vector<double>(steps, buy);
  d.price_sell = std::vector<double>(steps, 0.0);
  return d;
}

TEST(ActionSpaceTest, UniformGrid) {
  DeviceSet dev;
  dev.bess.push_back({0, 100.0, 40.0, 1, 1, 0, 1, 0.5, 0});
  const ActionSpace a(dev, 11);
  EXPECT_EQ(a.level_kw(0, 0), -40.0);
  EXPECT_EQ(a.level_kw(0, 10), 40.0);
  EXPECT_EQ(a.level_kw(0, a.idle_level()), 0.0);
  for (std::size_t k = 1; k < 11; ++k) EXPECT_LT(a.level_kw(0, k - 1), a.level_kw(0, k));
  EXPECT_THROW(ActionSpace(dev, 1), ValidationError);
  EXPECT_THROW(a.level_kw(0, 11), ValidationError);
}

TEST(EnvTest, ResetState) {
  const auto net = load_network(kData + "/networks/six_bus.json");
  MicrogridEnv env(net, ScenarioConfig{}, EnvConfig{});
  const auto days = synth_dataset(3, 1, profile_for(net.devices, ScenarioConfig{}));
  const auto a = env.reset(days[0]);
  const auto b = env.reset(days[0]);
  EXPECT_EQ(a.t, 0u);
  ASSERT_EQ(a.soc.size(), net.devices.bess.size());
  for (std::size_t d = 0; d < a.soc.size(); ++d) EXPECT_EQ(a.soc[d], net.devices.bess[d].soc_init);
  EXPECT_EQ(a.solar.size(), env.window());
  EXPECT_EQ(a.load, std::vector<double>(env.window(), days[0].total_load(0)));
  EXPECT_EQ(a.soc, b.soc);
  EXPECT_EQ(a.load, b.load);
  EXPECT_EQ(env.observe(a), env.observe(b));

  auto short_day = days[0];
  for (auto& [id, s] : short_day.load) s.pop_back();
  for (auto& [id, s] : short_day.solar) s.pop_back();
  for (auto& [id, s] : short_day.wind) s.pop_back();
  short_day.price_buy.pop_back();
  short_day.price_sell.pop_back();
  EXPECT_THROW(env.reset(short_day), ValidationError);
}

TEST(EnvTest, ClipExamples) {
  MicrogridEnv env(one_bess_bus(0.95, 0.95), ScenarioConfig{}, EnvConfig{});
  const auto day = flat_day(24, 50.0, 0.1);
  auto s = env.reset(day);
  std::vector<bool> flags;

  const auto c = env.clip({-50.0}, s, &flags);
  EXPECT_NEAR(c[0], -(0.9 - 0.5) * 100.0 / 0.95, 1e-12);
  EXPECT_NEAR(c[0], -42.105, 1e-3);
  EXPECT_TRUE(flags[0]);

  const auto idle = env.feasible_clip({env.actions().idle_level()}, s, &flags);
  EXPECT_EQ(idle[0], 0.0);
  EXPECT_FALSE(flags[0]);

  s.soc[0] = 0.9;
  const auto full = env.feasible_clip({0}, s, &flags);
  EXPECT_EQ(full[0], 0.0);
  EXPECT_TRUE(flags[0]);

  s.soc[0] = 0.1;
  const auto empty = env.feasible_clip({10}, s, &flags);
  EXPECT_EQ(empty[0], 0.0);
  EXPECT_TRUE(flags[0]);
}

TEST(EnvTest, StepExamples) {
  NetworkFile net = one_bess_bus(1.0, 1.0);
  net.devices.dgs.push_back({0, 0.0, 100.0, -50.0, 50.0, 100.0, 0.0, 0.0, 2.5});
  MicrogridEnv env(net, ScenarioConfig{}, EnvConfig{});

  const auto zero = flat_day(24, 0.0, 0.0);
  auto s = env.reset(zero);
  const auto idle = env.step(s, {env.actions().idle_level()});
  EXPECT_NEAR(idle.reward, -2.5, 1e-5);
  EXPECT_EQ(idle.reward + idle.solution.cost.total(), 0.0);
  EXPECT_FALSE(idle.terminal);

  const auto day = flat_day(24, 50.0, 0.1);
  s = env.reset(day);
  const auto out = env.step_powers(s, {10.0});
  EXPECT_NEAR(out.next.soc[0], s.soc[0] - 0.10, 1e-15);
  EXPECT_EQ(out.next.t, 1u);
  EXPECT_EQ(out.reward + out.solution.cost.total(), 0.0);

  s.t = env.steps() - 1;
  EXPECT_TRUE(env.step(s, {5}).terminal);
  s.t = env.steps();
  EXPECT_THROW(env.step(s, {5}), ValidationError);
}

TEST(EnvTest, StepIsPure) {
  const auto net = load_network(kData + "/networks/six_bus.json");
  MicrogridEnv env(net, ScenarioConfig{}, EnvConfig{});
  const auto days = synth_dataset(5, 1, profile_for(net.devices, ScenarioConfig{}));
  auto s = env.reset(days[0]);
  s = env.step(s, {3}).next;
  const auto a = env.step(s, {8});
  const auto b = env.step(s, {8});
  EXPECT_EQ(a.reward, b.reward);
  EXPECT_EQ(a.next.soc, b.next.soc);
  EXPECT_EQ(a.solution.v, b.solution.v);
  EXPECT_EQ(env.observe(a.next), env.observe(b.next));
}

TEST(EnvTest, HistoryWindowAdvances) {
  const auto net = load_network(kData + "/networks/six_bus.json");
  EnvConfig ec;
  ec.history_hours = 4.0;
  MicrogridEnv env(net, ScenarioConfig{}, ec);
  const auto days = synth_dataset(5, 1, profile_for(net.devices, ScenarioConfig{}));
  auto s = env.reset(days[0]);
  for (int k = 0; k < 6; ++k) s = env.step(s, {5}).next;
  ASSERT_EQ(s.load.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s.load[i], days[0].total_load(3 + i));
  EXPECT_EQ(s.price_buy, days[0].price_buy[6]);
}

TEST(EnvTest, RandomStepsKeepSocInBoundsAndClipIsIdempotent) {
  std::mt19937_64 rng(2024);
  ScenarioConfig cfg;
  int steps = 0;
  for (const char* name : {"single_bus", "six_bus"}) {
    const auto net = load_network(kData + "/networks/" + name + ".json");
    MicrogridEnv env(net, cfg, EnvConfig{});
    const auto days = synth_dataset(rng(), 20, profile_for(net.devices, cfg));
    const int target = std::string(name) == "single_bus" ? 8000 : 2000;
    for (int done = 0; done < target;) {
      auto s = env.reset(days[rng() % days.size()]);
      bool terminal = false;
      while (!terminal && done < target) {
        std::vector<std::size_t> levels(net.devices.bess.size());
        for (auto& l : levels) l = rng() % env.actions().levels();
        const auto clipped = env.feasible_clip(levels, s);
        EXPECT_EQ(env.clip(clipped, s), clipped);
        const auto out = env.step(s, levels);
        for (std::size_t d = 0; d < out.next.soc.size(); ++d) {
          ASSERT_GE(out.next.soc[d], net.devices.bess[d].soc_min);
          ASSERT_LE(out.next.soc[d], net.devices.bess[d].soc_max);
        }
        terminal = out.terminal;
        s = out.next;
        ++done;
        ++steps;
      }
    }
  }
  EXPECT_EQ(steps, 10000);
}

}  // namespace
}  // namespace branchgrid

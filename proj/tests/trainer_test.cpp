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

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "branchgrid/errors.hpp"

namespace branchgrid {
namespace {

const std::string kData = BRANCHGRID_DATA_DIR;

struct Fixture {
  MicrogridEnv env;
  std::vector<ExogenousDay> train_days, eval_days;

  Fixture(std::size_t n_train, std::size_t n_eval)
      : env(load_network(kData + "/networks/single_bus.json"), ScenarioConfig{}, small_env()) {
    const auto prof = profile_for(env.devices(), env.scenario());
    train_days = synth_dataset(1, n_train, prof);
    eval_days = synth_dataset(2, n_eval, prof);
    for (auto& d : eval_days) d.day_id += 1000;
  }

  static EnvConfig small_env() {
    EnvConfig c;
    c.history_hours = 3.0;
    return c;
  }

  AgentConfig agent_config() const {
    AgentConfig c = agent_config_for(env);
    c.lstm_hidden = 4;
    c.trunk = {16};
    c.head_hidden = 8;
    c.eps_decay_steps = 200;
    return c;
  }
};

TrainConfig tiny(std::int64_t episodes, std::int64_t freq) {
  TrainConfig c;
  c.episodes = episodes;
  c.train_freq = freq;
  c.batch = 8;
  c.lr = 1e-3;
  c.target_sync = 10;
  c.eval_period = 2;
  c.seed = 3;
  c.reward_scale = 0.04;
  return c;
}

TEST(Train, OneEpisodeLoopAccounting) {
  for (std::int64_t freq : {1, 5}) {
    Fixture fx(1, 1);
    BdqNetwork agent(fx.agent_config(), 1);
    PrioritizedReplay replay;
    const auto log = train(fx.env, fx.train_days, fx.eval_days, agent, replay, tiny(1, freq));
    EXPECT_EQ(replay.size(), 24u);
    EXPECT_EQ(log.env_steps, 24);
    EXPECT_EQ(log.grad_steps, 24 / freq);
    EXPECT_EQ(log.losses.size(), static_cast<std::size_t>(24 / freq));
    ASSERT_EQ(log.rows.size(), 1u);
    EXPECT_FALSE(log.rows[0].eval_return.has_value());
  }
}

TEST(Train, SameSeedSameLog) {
  auto run = [] {
    Fixture fx(3, 2);
    BdqNetwork agent(fx.agent_config(), 7);
    PrioritizedReplay replay;
    const auto log = train(fx.env, fx.train_days, fx.eval_days, agent, replay, tiny(4, 2));
    return std::make_pair(log.to_csv(), agent.params().flatten());
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Train, LogShapeAndEvaluationCadence) {
  Fixture fx(3, 2);
  BdqNetwork agent(fx.agent_config(), 8);
  PrioritizedReplay replay;
  const auto log = train(fx.env, fx.train_days, fx.eval_days, agent, replay, tiny(5, 1));
  const std::string csv = log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "episode,step,epsilon,loss,episode_return,eval_return");
  ASSERT_EQ(log.rows.size(), 5u);
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    EXPECT_EQ(log.rows[i].episode, static_cast<std::int64_t>(i));
    EXPECT_EQ(log.rows[i].step, static_cast<std::int64_t>(24 * (i + 1)));
    EXPECT_EQ(log.rows[i].eval_return.has_value(), i % 2 == 1) << i;
    EXPECT_LT(log.rows[i].episode_return, 0.0);
  }
  EXPECT_EQ(log.wall_seconds.size(), 5u);
}

TEST(Train, ReplayGrowthIsCapped) {
  Fixture fx(2, 1);
  BdqNetwork agent(fx.agent_config(), 9);
  ReplayConfig rc;
  rc.capacity = 60;
  PrioritizedReplay small(rc), big;
  train(fx.env, fx.train_days, fx.eval_days, agent, small, tiny(3, 4));
  EXPECT_EQ(small.size(), 60u);
  BdqNetwork agent2(fx.agent_config(), 9);
  train(fx.env, fx.train_days, fx.eval_days, agent2, big, tiny(3, 4));
  EXPECT_EQ(big.size(), 72u);
}

TEST(Train, TargetSyncsCopyTheMainNetwork) {
  Fixture fx(2, 1);
  BdqNetwork agent(fx.agent_config(), 10);
  PrioritizedReplay replay;
  int syncs = 0;
  TrainHooks hooks;
  hooks.on_sync = [&](std::int64_t step, const diff::ParamStore& target) {
    ++syncs;
    EXPECT_EQ(step % 10, 0);
    EXPECT_EQ(target.flatten(), agent.params().flatten());
  };
  const auto log = train(fx.env, fx.train_days, fx.eval_days, agent, replay, tiny(3, 1), hooks);
  EXPECT_EQ(syncs, log.grad_steps / 10);
}

TEST(Evaluate, PureAndRepeatable) {
  Fixture fx(1, 3);
  BdqNetwork agent(fx.agent_config(), 11);
  const auto before = agent.params().flatten();
  const double a = evaluate(fx.env, agent, fx.eval_days);
  const double b = evaluate(fx.env, agent, fx.eval_days);
  EXPECT_EQ(a, b);
  EXPECT_EQ(agent.params().flatten(), before);

  BdqPolicy p(agent);
  const double single = evaluate(fx.env, p, {fx.eval_days[0]});
  EXPECT_EQ(single, rollout(fx.env, fx.eval_days[0], p).ret);
  EXPECT_THROW(evaluate(fx.env, agent, {}), ValidationError);
}

TEST(Evaluate, MyopicWrapperMatchesBaseline) {
  Fixture fx(1, 2);
  MyopicPolicy m;
  double direct = 0.0;
  for (const auto& d : fx.eval_days) {
    EnvState s = fx.env.reset(d);
    for (std::size_t t = 0; t < fx.env.steps(); ++t) {
      auto o = fx.env.step_powers(s, myopic_decide(fx.env, s));
      direct += o.solution.cost.total();
      s = o.next;
    }
  }
  EXPECT_NEAR(-evaluate(fx.env, m, fx.eval_days), direct / 2.0, 1e-9);
}

TEST(Train, EvaluationLeavesReplayUntouched) {
  Fixture fx(2, 2);
  BdqNetwork agent(fx.agent_config(), 12);
  PrioritizedReplay replay;
  train(fx.env, fx.train_days, fx.eval_days, agent, replay, tiny(1, 1));
  const std::size_t n = replay.size();
  double psum = replay.tree().total();
  evaluate(fx.env, agent, fx.eval_days);
  EXPECT_EQ(replay.size(), n);
  EXPECT_EQ(replay.tree().total(), psum);
}

TEST(Train, SolverFailuresAbortPastBudget) {
  Fixture fx(1, 1);
  SolverOptions broken;
  broken.max_iterations = 1;
  {
    BdqNetwork agent(fx.agent_config(), 13);
    PrioritizedReplay replay;
    EXPECT_THROW(train(fx.env, fx.train_days, {}, agent, replay, tiny(3, 1), {}, broken),
                 TrainingAborted);
  }
  {
    BdqNetwork agent(fx.agent_config(), 13);
    PrioritizedReplay replay;
    auto cfg = tiny(3, 1);
    cfg.max_failure_fraction = 1.0;
    const auto log = train(fx.env, fx.train_days, {}, agent, replay, cfg, {}, broken);
    EXPECT_EQ(log.failures, 3);
    for (const auto& r : log.rows) EXPECT_TRUE(r.failed);
  }
}

TEST(Train, RejectsOverlapAndMismatch) {
  Fixture fx(2, 1);
  PrioritizedReplay replay;
  BdqNetwork agent(fx.agent_config(), 14);
  EXPECT_THROW(train(fx.env, fx.train_days, fx.train_days, agent, replay, tiny(1, 1)),
               ValidationError);
  EXPECT_THROW(train(fx.env, {}, fx.eval_days, agent, replay, tiny(1, 1)), ValidationError);
  auto wrong = fx.agent_config();
  wrong.levels = 5;
  BdqNetwork other(wrong, 14);
  EXPECT_THROW(train(fx.env, fx.train_days, fx.eval_days, other, replay, tiny(1, 1)),
               ValidationError);
  auto bad = tiny(1, 1);
  bad.batch = 0;
  EXPECT_THROW(train(fx.env, fx.train_days, fx.eval_days, agent, replay, bad), ValidationError);
}

}  // namespace
}  // namespace branchgrid

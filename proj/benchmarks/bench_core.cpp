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

#include <benchmark/benchmark.h>

#include "branchgrid/agent.hpp"
#include "branchgrid/baselines.hpp"
#include "branchgrid/env.hpp"
#include "branchgrid/opf.hpp"
#include "branchgrid/replay.hpp"

namespace branchgrid {
namespace {

const std::string kData = BRANCHGRID_DATA_DIR;

struct Setup {
  NetworkFile net;
  ScenarioConfig scenario;
  std::vector<ExogenousDay> days;

  explicit Setup(const std::string& name) : net(load_network(kData + "/networks/" + name + ".json")) {
    days = synth_dataset(1, 2, profile_for(net.devices, scenario));
  }
};

void BM_SinglePeriodOpf(benchmark::State& state, const char* network) {
  const Setup s(network);
  const std::vector<double> bess(s.net.devices.bess.size(), 0.0);
  std::size_t t = 0;
  for (auto _ : state) {
    const auto in = make_instance(s.days[0], t, s.net.topology, s.net.devices, bess);
    benchmark::DoNotOptimize(solve_opf(in, s.net.topology, s.net.devices, s.scenario));
    t = (t + 1) % s.days[0].steps();
  }
}
BENCHMARK_CAPTURE(BM_SinglePeriodOpf, single_bus, "single_bus")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SinglePeriodOpf, ieee33, "ieee33")->Unit(benchmark::kMillisecond);

void BM_MultiPeriodRelaxation(benchmark::State& state, const char* network) {
  const Setup s(network);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_multiperiod(s.days[0], s.net.topology, s.net.devices, s.scenario));
  }
}
BENCHMARK_CAPTURE(BM_MultiPeriodRelaxation, six_bus, "six_bus")->Unit(benchmark::kMillisecond);

void BM_GradientStep(benchmark::State& state) {
  const Setup s("ieee33");
  const MicrogridEnv env(s.net, s.scenario);
  BdqNetwork agent(agent_config_for(env), 1);
  const TargetNetwork target(agent);
  std::mt19937_64 rng(1);
  std::vector<Transition> ts;
  EnvState st = env.reset(s.days[0]);
  const auto batch_size = static_cast<std::size_t>(state.range(0));
  while (ts.size() < batch_size) {
    const auto a = random_policy(env.actions(), rng);
    const auto out = env.step(st, a);
    ts.push_back({env.observe(st), a, out.reward, env.observe(out.next), out.terminal});
    st = out.terminal ? env.reset(s.days[1]) : out.next;
  }
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  const std::vector<double> w(batch.size(), 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_grads(batch, w, agent, target.net, 0.99));
    diff::adam_step(agent.params(), diff::AdamConfig{});
  }
}
BENCHMARK(BM_GradientStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SumTreeUpdateFind(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SumTree tree(n);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) tree.set(i, u(rng) + 0.01);
  std::size_t i = 0;
  for (auto _ : state) {
    tree.set(i, u(rng) + 0.01);
    benchmark::DoNotOptimize(tree.find(u(rng) * tree.total()));
    i = (i + 7919) % n;
  }
}
BENCHMARK(BM_SumTreeUpdateFind)->Arg(1 << 10)->Arg(1 << 17);

void BM_ReplaySample(benchmark::State& state) {
  PrioritizedReplay replay(ReplayConfig{100000, 0.6, 0.01});
  Transition t;
  t.state.history = Eigen::MatrixXd::Zero(24, 3);
  t.state.scalars = Eigen::VectorXd::Zero(4);
  t.next = t.state;
  t.actions = {0};
  for (int i = 0; i < 20000; ++i) replay.push(t);
  std::mt19937_64 rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(replay.sample(64, 0.5, rng));
}
BENCHMARK(BM_ReplaySample);

}  // namespace
}  // namespace branchgrid

BENCHMARK_MAIN();

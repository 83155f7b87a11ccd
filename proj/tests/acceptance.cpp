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


// Acceptance gate: runs criteria 1-10 and prints one PASS/FAIL line per
// criterion. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "branchgrid/agent.hpp"
#include "branchgrid/baselines.hpp"
#include "branchgrid/cli/checkpoint.hpp"
#include "branchgrid/cli/commands.hpp"
#include "branchgrid/cli/reports.hpp"
#include "branchgrid/diffcore.hpp"
#include "branchgrid/env.hpp"
#include "branchgrid/opf.hpp"
#include "branchgrid/replay.hpp"
#include "branchgrid/trainer.hpp"
#include "stats_util.hpp"

namespace branchgrid::acceptance {
namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Clock = std::chrono::steady_clock;

const std::string kData = BRANCHGRID_DATA_DIR;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects failed checks with a short reason each.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    failed_ += ok ? 0 : 1;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string s = fmt::format("{}/{} checks", total_ - failed_, total_);
    for (const auto& n : notes_) s += "; " + n;
    for (const auto& f : failures_) s += "; FAILED " + f;
    return s;
  }

 private:
  int total_ = 0, failed_ = 0;
  std::vector<std::string> failures_, notes_;
};

NetworkFile network(const std::string& name) {
  return load_network(kData + "/networks/" + name + ".json");
}

std::vector<ExogenousDay> days_from(std::uint64_t seed, std::size_t n, const MicrogridEnv& env,
                                    int id_offset) {
  auto days = synth_dataset(seed, n, profile_for(env.devices(), env.scenario()));
  for (auto& d : days) d.day_id += id_offset;
  return days;
}

Observation random_obs(const AgentConfig& c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Observation o;
  o.history = MatrixXd::NullaryExpr(static_cast<Eigen::Index>(c.window), 3, [&] { return n(rng); });
  o.scalars = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(c.scalar_features),
                                           [&] { return n(rng); });
  return o;
}

Transition random_transition(const AgentConfig& c, std::mt19937_64& rng, bool terminal) {
  Transition t;
  t.state = random_obs(c, rng);
  t.next = random_obs(c, rng);
  for (std::size_t d = 0; d < c.branches; ++d) t.actions.push_back(rng() % c.levels);
  t.reward = std::normal_distribution<double>(0.0, 1.0)(rng);
  t.terminal = terminal;
  return t;
}

AgentConfig small_agent(std::size_t branches, std::size_t levels) {
  AgentConfig c;
  c.branches = branches;
  c.levels = levels;
  c.window = 3;
  c.scalar_features = branches + 3;
  c.lstm_hidden = 4;
  c.trunk = {6, 5};
  c.head_hidden = 4;
  c.gamma = 0.9;
  return c;
}

void pin_heads(BdqNetwork& net, double value, const std::vector<std::vector<double>>& adv) {
  auto& p = net.params();
  p.at("value.out.w").value.setZero();
  p.at("value.out.b").value(0, 0) = value;
  for (std::size_t d = 0; d < adv.size(); ++d) {
    const std::string name = "adv" + std::to_string(d) + ".out";
    p.at(name + ".w").value.setZero();
    for (std::size_t b = 0; b < adv[d].size(); ++b) {
      p.at(name + ".b").value(0, static_cast<Eigen::Index>(b)) = adv[d][b];
    }
  }
}

// Shared training recipe for the convergence and ordering criteria.
struct Recipe {
  std::int64_t episodes = 3000;
  double reward_scale = 0.04;
  std::int64_t eval_period = 250;
};

EnvConfig recipe_env() {
  EnvConfig e;
  e.history_hours = 6.0;
  return e;
}

AgentConfig recipe_agent(const MicrogridEnv& env, const Recipe& r) {
  AgentConfig c = agent_config_for(env);
  c.lstm_hidden = 8;
  c.trunk = {64, 32};
  c.head_hidden = 16;
  c.eps_decay_steps = r.episodes * static_cast<std::int64_t>(env.steps()) / 2;
  return c;
}

TrainConfig recipe_train(const Recipe& r, std::uint64_t seed) {
  TrainConfig t;
  t.episodes = r.episodes;
  t.train_freq = 2;
  t.batch = 32;
  t.lr = 1e-3;
  t.target_sync = 200;
  t.eval_period = r.eval_period;
  t.seed = seed;
  t.reward_scale = r.reward_scale;
  return t;
}

ReplayConfig recipe_replay() {
  ReplayConfig c;
  c.capacity = 20000;
  return c;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

Checks criterion1() {
  Checks c;
  AgentConfig five;
  five.branches = 5;
  five.levels = 11;
  const auto counts = output_count(five);
  c.expect(counts.first == 55 && counts.second == 161051,
           fmt::format("output_count = ({}, {})", counts.first, counts.second));

  const MicrogridEnv env(network("ieee33"), ScenarioConfig{});
  BdqNetwork agent(agent_config_for(env), 1);
  const TargetNetwork target(agent);
  const auto days = days_from(1, 2, env, 0);
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd q = agent.q_values(env.observe(env.reset(days[0])));
  c.expect(q.size() == 55, fmt::format("33-bus network has {} Q-outputs", q.size()));

  std::vector<Transition> ts;
  EnvState s = env.reset(days[0]);
  while (ts.size() < 64) {
    const auto a = random_policy(env.actions(), rng);
    const auto out = env.step(s, a);
    ts.push_back({env.observe(s), a, out.reward, env.observe(out.next), out.terminal});
    s = out.terminal ? env.reset(days[1]) : out.next;
  }
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  const auto t0 = Clock::now();
  loss_and_grads(batch, std::vector<double>(batch.size(), 1.0), agent, target.net, 0.99);
  diff::adam_step(agent.params(), diff::AdamConfig{});
  const double secs = seconds_since(t0);
  c.expect(secs < 1.0, fmt::format("gradient step took {:.3f} s", secs));
  c.note(fmt::format("batch-64 gradient step {:.3f} s", secs));
  return c;
}

Checks criterion2() {
  Checks c;
  const double tol = 1e-12;
  {
    const MatrixXd q = branch_q(1.0, (MatrixXd(1, 3) << 2, 0, 1).finished());
    c.expect((q - (MatrixXd(1, 3) << 2, 0, 1).finished()).cwiseAbs().maxCoeff() <= tol,
             "branch Q hand example");
  }
  {
    const MatrixXd qm = (MatrixXd(2, 3) << 1, 3, 2, 0, -1, 5).finished();
    const MatrixXd qt = (MatrixXd(2, 3) << 10, 20, 30, 4, 5, 6).finished();
    c.expect(std::abs(td_target(1.0, false, 0.9, qm, qt) - 12.7) <= tol, "TD target hand example");
    c.expect(td_target(1.0, true, 0.9, qm, qt) == 1.0, "terminal TD target");
  }
  {
    const auto cfg = small_agent(1, 3);
    BdqNetwork net(cfg, 3);
    pin_heads(net, 1.0, {{2, 0, 1}});
    std::mt19937_64 rng(3);
    std::vector<Transition> ts{random_transition(cfg, rng, false), random_transition(cfg, rng, true)};
    ts[0].actions = {0};
    ts[1].actions = {2};
    const Eigen::VectorXd y = (Eigen::VectorXd(2) << 2.5, 0.0).finished();
    const auto r = loss_and_grads({&ts[0], &ts[1]}, {1.0, 0.5}, net, y);
    c.expect(std::abs(r.loss - 0.375) <= tol, fmt::format("loss hand example {}", r.loss));
    c.expect(std::abs(r.td_errors(0) - 0.5) <= tol && std::abs(r.td_errors(1) - 1.0) <= tol,
             "TD error hand example");
  }
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst_shift = 0.0, worst_mean = 0.0;
  int argmax_bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t N = 1 + rng() % 3, n = 2 + rng() % 4;
    const auto cfg = small_agent(N, n);
    BdqNetwork net(cfg, static_cast<std::uint64_t>(k));
    const Observation o = random_obs(cfg, rng);
    const MatrixXd q = net.q_values(o);
    const Eigen::VectorXd means = q.rowwise().mean();
    worst_mean = std::max(worst_mean, (means.array() - means(0)).abs().maxCoeff());
    for (std::size_t d = 0; d < N; ++d) {
      net.params().at("adv" + std::to_string(d) + ".out.b").value.array() += u(rng);
    }
    worst_shift = std::max(worst_shift, (net.q_values(o) - q).cwiseAbs().maxCoeff());

    const MatrixXd a = MatrixXd::NullaryExpr(static_cast<Eigen::Index>(N),
                                             static_cast<Eigen::Index>(n), [&] { return u(rng); });
    const MatrixXd qa = branch_q(u(rng), a);
    for (Eigen::Index d = 0; d < a.rows(); ++d) {
      Eigen::Index i1, i2;
      a.row(d).maxCoeff(&i1);
      qa.row(d).maxCoeff(&i2);
      argmax_bad += i1 != i2;
    }
  }
  c.expect(worst_shift <= tol, fmt::format("advantage shift moved Q by {:.2e}", worst_shift));
  c.expect(worst_mean <= tol, fmt::format("branch means differ by {:.2e}", worst_mean));
  c.expect(argmax_bad == 0, fmt::format("{} argmax disagreements", argmax_bad));
  c.note(fmt::format("1000 networks: shift {:.1e}, mean {:.1e}", worst_shift, worst_mean));
  return c;
}

Checks criterion3() {
  Checks c;
  const auto t0 = Clock::now();
  double worst_loss = 0.0;
  std::size_t exempt = 0, checked = 0;
  for (int trial = 0; trial < 3; ++trial) {
    const auto cfg = small_agent(2, 3);
    BdqNetwork net(cfg, 100 + static_cast<std::uint64_t>(trial));
    TargetNetwork target(net);
    for (std::size_t i = 0; i < target.net.params().size(); ++i) {
      target.net.params()[i].value.array() += 0.05;
    }
    std::mt19937_64 rng(200 + static_cast<std::uint64_t>(trial));
    std::vector<Transition> ts;
    for (int i = 0; i < 4; ++i) ts.push_back(random_transition(cfg, rng, i == 3));
    std::vector<const Transition*> batch;
    for (const auto& t : ts) batch.push_back(&t);
    const std::vector<double> w{1.0, 0.3, 0.7, 0.5};
    const Eigen::VectorXd y = td_targets(batch, net, target.net, cfg.gamma);
    const auto res = diff::grad_check(
        [&](diff::Graph& g) { return record_loss(g, batch, w, net, y); }, net.params());
    worst_loss = std::max(worst_loss, res.max_rel_error);
    exempt += res.exemptions.size();
    checked += res.checked;
  }
  c.expect(worst_loss <= 1e-4, fmt::format("full loss max rel error {:.2e}", worst_loss));

  std::mt19937_64 rng(7);
  diff::ParamStore store;
  auto& wx = store.add("wx", diff::xavier_uniform(2, 12, 2, 12, rng));
  auto& wh = store.add("wh", diff::xavier_uniform(3, 12, 3, 12, rng));
  auto& lb = store.add("lb", MatrixXd::Constant(1, 12, 0.1));
  auto& w1 = store.add("w1", diff::xavier_uniform(3, 4, 3, 4, rng));
  auto& b1 = store.add("b1", MatrixXd::Constant(1, 4, -0.2));
  auto& w2 = store.add("w2", diff::xavier_uniform(4, 3, 4, 3, rng));
  auto& b2 = store.add("b2", MatrixXd::Constant(1, 3, 0.3));
  auto& wv = store.add("wv", diff::xavier_uniform(4, 1, 4, 1, rng));
  auto& bv = store.add("bv", MatrixXd::Zero(1, 1));
  std::vector<MatrixXd> seq;
  std::normal_distribution<double> n01;
  for (int t = 0; t < 4; ++t) seq.push_back(MatrixXd::NullaryExpr(5, 2, [&] { return n01(rng); }));
  const auto smooth = diff::grad_check(
      [&](diff::Graph& g) {
        std::vector<diff::Graph::Id> xs;
        for (const auto& m : seq) xs.push_back(g.input(m));
        const auto h = g.lstm(xs, wx, wh, lb);
        const auto z = g.dense(h, w1, b1, diff::Activation::kTanh);
        const auto a = g.dense(z, w2, b2, diff::Activation::kSigmoid);
        const auto v = g.dense(z, wv, bv, diff::Activation::kIdentity);
        return g.mean(g.square(g.dueling(v, a)));
      },
      store);
  c.expect(smooth.max_rel_error <= 1e-6,
           fmt::format("smooth ops max rel error {:.2e}", smooth.max_rel_error));
  const double secs = seconds_since(t0);
  c.expect(secs < 120.0, fmt::format("runtime {:.1f} s", secs));
  c.note(fmt::format("loss {:.1e} over {} coords ({} kink exemptions), smooth {:.1e}", worst_loss,
                     checked, exempt, smooth.max_rel_error));
  return c;
}

// Smallest root of P - r P^2 / v0 = 1 (per unit) by grid scan then bisection.
double two_bus_import(double r, double v0) {
  auto g = [&](double p) { return p - r * p * p / v0 - 1.0; };
  double lo = 1.0, hi = 2.0;
  for (int i = 0; i < 20000; ++i) {
    const double a = 1.0 + i / 20000.0, b = 1.0 + (i + 1) / 20000.0;
    if (g(a) <= 0.0 && g(b) > 0.0) {
      lo = a;
      hi = b;
      break;
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

Checks criterion4() {
  Checks c;
  {
    const double r = 0.01, v0 = 1.1025;
    const auto topo = make_topology({{0, 0.9025, v0}, {1, 0.81, 1.21}}, {{0, 1, r, 0.0, 4.0}}, 0,
                                    1000.0, 12.66);
    DeviceSet dev;
    dev.p_grid_max = 3000.0;
    OpfInstance in;
    in.load_p_kw = {0.0, 1000.0};
    in.load_q_kvar = {0.0, 0.0};
    in.price_buy = 0.1;
    const auto sol = solve_opf(in, topo, dev, ScenarioConfig{});
    const double expected = two_bus_import(r, v0) * topo.base_kva;
    const double rel = std::abs(sol.p_buy_kw / expected - 1.0);
    c.expect(rel <= 1e-4, fmt::format("2-bus import rel error {:.2e}", rel));
    c.note(fmt::format("2-bus rel error {:.1e}", rel));
  }
  double worst_balance = 0.0, worst_gap = 0.0, worst_slack = 0.0, worst_33 = 0.0;
  std::size_t solves = 0;
  for (const char* name : {"single_bus", "two_bus", "six_bus", "ieee33"}) {
    const auto net = network(name);
    const ScenarioConfig cfg;
    const auto days = synth_dataset(9, 2, profile_for(net.devices, cfg));
    for (const auto& day : days) {
      for (std::size_t t = 0; t < day.steps(); ++t) {
        std::vector<double> inj;
        for (const auto& b : net.devices.bess) inj.push_back((t % 3 == 0 ? 0.0 : t % 3 == 1 ? 0.5 : -0.5) * b.p_max);
        const auto in = make_instance(day, t, net.topology, net.devices, inj);
        const auto t0 = Clock::now();
        const auto sol = solve_opf(in, net.topology, net.devices, cfg);
        if (std::string(name) == "ieee33") worst_33 = std::max(worst_33, seconds_since(t0));
        worst_balance = std::max(worst_balance, sol.balance_residual);
        worst_gap = std::max(worst_gap, check_exactness(sol, net.topology).max_gap);
        worst_slack = std::max(worst_slack, sol.total_slack_kw());
        ++solves;
      }
    }
  }
  c.expect(worst_balance <= 1e-6, fmt::format("balance residual {:.2e}", worst_balance));
  c.expect(worst_gap <= 1e-5, fmt::format("cone gap {:.2e}", worst_gap));
  c.expect(worst_slack <= 1e-3, fmt::format("slack {:.2e} kW", worst_slack));
  c.expect(worst_33 < 1.0, fmt::format("33-bus solve {:.3f} s", worst_33));
  c.note(fmt::format("{} solves: balance {:.1e}, gap {:.1e}, slack {:.1e} kW, 33-bus max {:.3f} s",
                     solves, worst_balance, worst_gap, worst_slack, worst_33));
  return c;
}

// Exhaustive search over all level sequences with the DP's snapped dynamics.
double enumerate_best(const MicrogridEnv& env, const ExogenousDay& day,
                      const std::vector<double>& grid, std::size_t* visited) {
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
  for (std::size_t code0 = 0; code0 < combos; ++code0) {
    std::vector<double> stage(T);
    EnvState s;
    s.soc = {snap(env.devices().bess[0].soc_init)};
    std::size_t code = code0;
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
    ++*visited;
  }
  return best;
}

Checks criterion5() {
  Checks c;
  {
    NetworkFile net;
    net.topology = make_topology({{0, 0.9, 1.1}}, {}, 0, 1000.0, 0.4);
    net.devices.p_grid_max = 1000.0;
    net.devices.loads.push_back({0, 0.0, 100.0});
    net.devices.bess.push_back({0, 100.0, 25.0, 1.0, 1.0, 0.0, 1.0, 0.5, 0.002});
    ScenarioConfig sc;
    sc.horizon_hours = 4.0;
    EnvConfig ec;
    ec.levels = 3;
    ec.history_hours = 1.0;
    const MicrogridEnv env(net, sc, ec);
    ExogenousDay day;
    day.price_buy = {0.30, 0.05, 0.10, 0.40};
    for (double b : day.price_buy) day.price_sell.push_back(0.5 * b);
    day.load[0] = std::vector<double>(4, 40.0);
    DpOptions dp;
    dp.soc_levels = 5;
    const auto r = dp_oracle(env, day, dp);
    std::size_t visited = 0;
    const double brute = enumerate_best(env, day, r.soc_grid[0], &visited);
    c.expect(visited == 81, fmt::format("enumerated {} sequences", visited));
    c.expect(r.cost == brute, fmt::format("dp {} vs enumeration {}", r.cost, brute));
  }
  const MicrogridEnv env(network("single_bus"), ScenarioConfig{});
  const auto days = days_from(55, 20, env, 0);
  DpPolicy dp;
  MyopicPolicy my;
  std::vector<double> gap_dp;  // myopic - dp
  int lower_bound_violations = 0, dp_wins = 0;
  for (const auto& d : days) {
    const double relaxed = relaxed_oracle(env, d);
    const double oracle = rollout(env, d, dp).cost;
    const double myopic = rollout(env, d, my).cost;
    lower_bound_violations += relaxed > oracle + 1e-6 * std::abs(oracle);
    dp_wins += oracle <= myopic;
    gap_dp.push_back(myopic - oracle);
  }
  const double n = static_cast<double>(gap_dp.size());
  const double mean = std::accumulate(gap_dp.begin(), gap_dp.end(), 0.0) / n;
  double ss = 0.0;
  for (double g : gap_dp) ss += (g - mean) * (g - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t tdist(n - 1.0);
  const double lower = mean - boost::math::quantile(tdist, 0.95) * sd / std::sqrt(n);
  c.expect(lower_bound_violations == 0,
           fmt::format("relaxed > dp on {} days", lower_bound_violations));
  c.expect(lower > 0.0, fmt::format("95% lower bound of myopic - dp = {:.3f}", lower));
  c.note(fmt::format("20 days: relaxed <= dp on all, dp <= myopic on {}, mean(myopic - dp) = {:.2f} "
                     "USD, 95% lower bound {:.2f}",
                     dp_wins, mean, lower));
  return c;
}

struct TrainedRun {
  std::vector<std::int64_t> episodes;
  std::vector<double> eval_returns;  // includes the untrained agent at episode 0
  BdqNetwork agent;
};

TrainedRun train_recipe(const MicrogridEnv& env, const std::vector<ExogenousDay>& train_days,
                        const std::vector<ExogenousDay>& eval_days, const Recipe& r,
                        std::uint64_t seed) {
  TrainedRun run{{}, {}, BdqNetwork(recipe_agent(env, r), seed)};
  run.episodes.push_back(0);
  run.eval_returns.push_back(evaluate(env, run.agent, eval_days));
  PrioritizedReplay replay(recipe_replay());
  TrainHooks hooks;
  hooks.on_episode = [&](const TrainLogRow& row) {
    if (row.eval_return) {
      run.episodes.push_back(row.episode + 1);
      run.eval_returns.push_back(*row.eval_return);
    }
  };
  train(env, train_days, eval_days, run.agent, replay, recipe_train(r, seed), hooks);
  return run;
}

Checks criterion6() {
  Checks c;
  const auto t0 = Clock::now();
  const MicrogridEnv env(network("single_bus"), ScenarioConfig{}, recipe_env());
  const auto train_days = days_from(100, 50, env, 0);
  const auto eval_days = days_from(200, 10, env, 1000);
  MyopicPolicy my;
  double myopic = 0.0, relaxed = 0.0;
  for (const auto& d : eval_days) {
    myopic += rollout(env, d, my).cost;
    relaxed += relaxed_oracle(env, d);
  }
  myopic /= static_cast<double>(eval_days.size());
  relaxed /= static_cast<double>(eval_days.size());

  Recipe r;
  r.episodes = 3000;
  r.reward_scale = 0.04;
  r.eval_period = 250;
  std::vector<TrainedRun> runs;
  std::vector<double> recovered;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    runs.push_back(train_recipe(env, train_days, eval_days, r, seed));
    recovered.push_back((myopic + runs.back().eval_returns.back()) / (myopic - relaxed));
  }
  std::vector<double> xs, med;
  for (std::size_t k = 0; k < runs[0].episodes.size(); ++k) {
    std::vector<double> at;
    for (const auto& run : runs) at.push_back(run.eval_returns[k]);
    xs.push_back(static_cast<double>(runs[0].episodes[k]));
    med.push_back(median(at));
  }
  const double rho = spearman(xs, med);
  const std::size_t third = med.size() / 3;
  const double first = std::accumulate(med.begin(), med.begin() + third, 0.0) / third;
  const double last = std::accumulate(med.end() - third, med.end(), 0.0) / third;
  const double med_recovered = median(recovered);
  const double secs = seconds_since(t0);
  c.expect(rho >= 0.5, fmt::format("median curve Spearman rho {:.2f}", rho));
  c.expect(last > first, "median return did not rise");
  c.expect(med_recovered >= 0.6, fmt::format("median gap recovered {:.1f}%", 100 * med_recovered));
  c.expect(secs <= 1800.0, fmt::format("runtime {:.0f} s", secs));
  std::string per_seed;
  for (double x : recovered) per_seed += fmt::format("{}{:.0f}%", per_seed.empty() ? "" : " ", 100 * x);
  c.note(fmt::format("myopic {:.2f} relaxed {:.2f} USD/day; median return {:.2f} -> {:.2f}; rho "
                     "{:.2f}; gap recovered median {:.1f}% (seeds {}); {:.0f} s",
                     myopic, relaxed, med.front(), med.back(), rho, 100 * med_recovered, per_seed,
                     secs));
  return c;
}

Checks criterion7() {
  Checks c;
  struct Case {
    const char* name;
    std::int64_t episodes;
    double reward_scale;
  };
  for (const Case& k : {Case{"six_bus", 600, 0.01}, Case{"ieee33", 800, 0.005}}) {
    const MicrogridEnv env(network(k.name), ScenarioConfig{}, recipe_env());
    const auto train_days = days_from(100, 50, env, 0);
    const auto eval_days = days_from(200, 5, env, 1000);
    const auto test_days = days_from(300, 20, env, 2000);
    Recipe r;
    r.episodes = k.episodes;
    r.reward_scale = k.reward_scale;
    r.eval_period = k.episodes / 5;
    const auto run = train_recipe(env, train_days, eval_days, r, 1);
    MyopicPolicy my;
    BdqPolicy bdq(run.agent);
    std::vector<cli::MetricsRow> rows;
    int day_violations = 0;
    for (const auto& d : test_days) {
      const double base = rollout(env, d, my).cost;
      const double b = rollout(env, d, bdq).cost;
      const double o = relaxed_oracle(env, d);
      rows.push_back({d.day_id, "bdq", b, -b, improvement_vs_myopic(b, base)});
      rows.push_back({d.day_id, "relaxed_oracle", o, -o, improvement_vs_myopic(o, base)});
      day_violations += rows[rows.size() - 2].improvement_pct > rows.back().improvement_pct;
    }
    const auto table = cli::summarize(rows);
    const auto& tb = table[0];
    const auto& to = table[1];
    c.expect(tb.mean > 0.0, fmt::format("{}: BDQ mean improvement {:.2f}%", k.name, tb.mean));
    c.expect(tb.mean < to.mean, fmt::format("{}: BDQ {:.2f}% >= relaxed {:.2f}%", k.name, tb.mean,
                                            to.mean));
    c.expect(day_violations == 0, fmt::format("{}: BDQ beat the lower bound on {} days", k.name,
                                              day_violations));
    std::printf("  %s improvement vs myopic over %zu test days (%%):\n", k.name, tb.days);
    std::printf("    %-16s %8s %8s %8s %8s\n", "policy", "mean", "max", "min", "stddev");
    for (const auto& s : table) {
      std::printf("    %-16s %8.2f %8.2f %8.2f %8.2f\n", s.policy.c_str(), s.mean, s.max, s.min,
                  s.stddev);
    }
    c.note(fmt::format("{}: bdq {:.2f}% < relaxed {:.2f}%", k.name, tb.mean, to.mean));
  }
  return c;
}

Checks criterion8() {
  Checks c;
  std::mt19937_64 rng(2025);
  int steps = 0, soc_bad = 0, clip_bad = 0;
  for (const char* name : {"single_bus", "six_bus", "ieee33"}) {
    const auto net = network(name);
    const MicrogridEnv env(net, ScenarioConfig{});
    const auto days = days_from(rng(), 10, env, 0);
    const int target = std::string(name) == "ieee33" ? 1000 : 4500;
    for (int done = 0; done < target;) {
      auto s = env.reset(days[rng() % days.size()]);
      bool terminal = false;
      while (!terminal && done < target) {
        std::vector<std::size_t> lv(net.devices.bess.size());
        for (auto& l : lv) l = rng() % env.actions().levels();
        const auto clipped = env.feasible_clip(lv, s);
        clip_bad += env.clip(clipped, s) != clipped;
        const auto out = env.step(s, lv);
        for (std::size_t d = 0; d < out.next.soc.size(); ++d) {
          soc_bad += out.next.soc[d] < net.devices.bess[d].soc_min ||
                     out.next.soc[d] > net.devices.bess[d].soc_max;
        }
        terminal = out.terminal;
        s = out.next;
        ++done;
        ++steps;
      }
    }
  }
  c.expect(steps == 10000, fmt::format("{} steps", steps));
  c.expect(soc_bad == 0, fmt::format("{} SoC bound violations", soc_bad));
  c.expect(clip_bad == 0, fmt::format("{} non-idempotent clips", clip_bad));
  c.note(fmt::format("{} random steps", steps));
  return c;
}

Checks criterion9() {
  Checks c;
  PrioritizedReplay r(ReplayConfig{32, 0.6, 0.01});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> td(0.0, 4.0);
  Transition t;
  t.actions = {0};
  for (int i = 0; i < 20; ++i) r.push(t);
  std::vector<std::size_t> idx(20);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> errs(20), probs(20), counts(20, 0.0);
  for (auto& e : errs) e = td(rng);
  r.update_priorities(idx, errs);
  double z = 0.0;
  for (double e : errs) z += std::pow(e + 0.01, 0.6);
  for (std::size_t i = 0; i < 20; ++i) probs[i] = std::pow(errs[i] + 0.01, 0.6) / z;
  for (int i = 0; i < 100000; ++i) counts[r.sample(1, 0.4, rng).indices[0]] += 1.0;
  const double p = testing::chi_square_p(counts, probs);
  c.expect(p > 0.01, fmt::format("chi-square p = {:.4f}", p));

  SumTree tree(37);
  std::vector<double> shadow(64, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int op = 0; op < 20000; ++op) {
    const std::size_t leaf = rng() % 37;
    const double v = u(rng) < 0.1 ? 0.0 : u(rng) * 10.0;
    tree.set(leaf, v);
    shadow[leaf] = v;
    worst = std::max(worst, tree.max_structural_error());
    if (op % 500 == 0) {
      const double sum = std::accumulate(shadow.begin(), shadow.end(), 0.0);
      worst = std::max(worst, std::abs(tree.total() - sum) / std::max(1.0, sum));
      worst = std::max(worst, std::abs(tree.max() - *std::max_element(shadow.begin(), shadow.end())));
    }
  }
  c.expect(worst <= 1e-9, fmt::format("sum-tree invariant error {:.2e}", worst));
  c.note(fmt::format("p = {:.3f}, fuzz error {:.1e}", p, worst));
  return c;
}

Checks criterion10() {
  Checks c;
  const MicrogridEnv env(network("single_bus"), ScenarioConfig{}, recipe_env());
  const auto train_days = days_from(1, 4, env, 0);
  const auto eval_days = days_from(2, 2, env, 1000);
  Recipe r;
  r.episodes = 6;
  r.eval_period = 2;
  auto once = [&] {
    BdqNetwork agent(recipe_agent(env, r), 42);
    PrioritizedReplay replay(recipe_replay());
    const auto log = train(env, train_days, eval_days, agent, replay, recipe_train(r, 42));
    return std::make_pair(log.to_csv(), agent);
  };
  const auto [log_a, agent_a] = once();
  const auto [log_b, agent_b] = once();
  c.expect(log_a == log_b, "TrainLog bytes differ between identical runs");
  c.expect(agent_a.params().flatten() == agent_b.params().flatten(), "trained parameters differ");

  const fs::path dir = fs::temp_directory_path() / "branchgrid_acceptance_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto m = cli::save_checkpoint((dir / "a").string(), agent_a, 1, 2, "h");
  cli::CheckpointManifest man;
  const BdqNetwork back = cli::load_checkpoint(m, &man);
  std::mt19937_64 rng(10);
  int q_bad = 0;
  for (int k = 0; k < 16; ++k) {
    const Observation o = random_obs(agent_a.config(), rng);
    const MatrixXd qa = agent_a.q_values(o), qb = back.q_values(o);
    q_bad += std::memcmp(qa.data(), qb.data(), sizeof(double) * qa.size()) != 0;
  }
  c.expect(q_bad == 0, fmt::format("{} probe q_values differ after round trip", q_bad));
  cli::save_checkpoint((dir / "b").string(), back, man.step, man.env_steps, man.config_hash);
  c.expect(cli::read_file((dir / "a.bin").string()) == cli::read_file((dir / "b.bin").string()),
           "checkpoint payload not byte-identical after save-load-save");

  for (const char* name : {"single_bus", "two_bus", "six_bus", "ieee33"}) {
    const auto net = network(name);
    c.expect(parse_network(network_to_json(net)) == net, std::string(name) + " network round trip");
    const auto days = synth_dataset(3, 3, profile_for(net.devices, ScenarioConfig{}));
    c.expect(parse_dataset(dataset_to_csv(days)) == days, std::string(name) + " dataset round trip");
  }
  c.note("TrainLog, parameters, q_values and file round trips identical");
  return c;
}

struct Criterion {
  int id;
  const char* title;
  Checks (*run)();
};

}  // namespace
}  // namespace branchgrid::acceptance

int main(int argc, char** argv) {
  using namespace branchgrid::acceptance;
  const Criterion all[] = {
      {1, "linear output scaling and 33-bus gradient step", criterion1},
      {2, "branch Q, loss and TD target correctness", criterion2},
      {3, "gradient integrity", criterion3},
      {4, "OPF correctness", criterion4},
      {5, "oracle correctness and ordering", criterion5},
      {6, "single-bus convergence over 5 seeds", criterion6},
      {7, "myopic < BDQ < relaxed oracle ordering", criterion7},
      {8, "environment safety", criterion8},
      {9, "replay statistics", criterion9},
      {10, "determinism and round trips", criterion10},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& cr : all) {
    if (!only.empty() && !only.count(cr.id)) continue;
    const auto t0 = Clock::now();
    bool ok = false;
    std::string detail;
    try {
      const Checks res = cr.run();
      ok = res.ok();
      detail = res.summary();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failed += ok ? 0 : 1;
    std::printf("criterion %d: %s  %s [%.1f s] %s\n", cr.id, ok ? "PASS" : "FAIL", cr.title,
                seconds_since(t0), detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

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


#include "branchgrid/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "branchgrid/errors.hpp"

namespace branchgrid {

using diff::Activation;
using diff::Graph;
using diff::Matrix;

void AgentConfig::validate() const {
  if (branches < 1) throw ValidationError("agent needs at least one branch");
  if (levels < 2) throw ValidationError("agent needs at least two levels per branch");
  if (window < 1) throw ValidationError("agent history window must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0)) {
    throw ValidationError("epsilon schedule must stay within [0, 1]");
  }
  if (eps_decay_steps < 0) throw ValidationError("epsilon decay steps must be non-negative");
  if (lstm_hidden < 1 || head_hidden < 1 || trunk.empty() ||
      std::find(trunk.begin(), trunk.end(), 0u) != trunk.end()) {
    throw ValidationError("network widths must be positive");
  }
}

double AgentConfig::epsilon(std::int64_t step) const {
  if (eps_decay_steps <= 0 || step >= eps_decay_steps) return eps_end;
  const double f = static_cast<double>(std::max<std::int64_t>(step, 0)) /
                   static_cast<double>(eps_decay_steps);
  return eps_start + (eps_end - eps_start) * f;
}

AgentConfig agent_config_for(const MicrogridEnv& env) {
  AgentConfig c;
  c.branches = env.actions().branches();
  c.levels = env.actions().levels();
  c.window = env.window();
  c.scalar_features = env.scalar_features();
  return c;
}

Eigen::MatrixXd branch_q(double value, const Eigen::MatrixXd& advantages) {
  Eigen::MatrixXd q = advantages.colwise() - advantages.rowwise().mean();
  q.array() += value;
  return q;
}

BdqNetwork::BdqNetwork(AgentConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const auto h = static_cast<Eigen::Index>(config_.lstm_hidden);
  for (int c = 0; c < 3; ++c) {
    const std::string p = fmt::format("enc{}.", c);
    params_.add(p + "wx", diff::xavier_uniform(1, 4 * h, 1, 4 * h, rng));
    params_.add(p + "wh", diff::xavier_uniform(h, 4 * h, h, 4 * h, rng));
    Matrix b = Matrix::Zero(1, 4 * h);
    b.middleCols(h, h).setOnes();
    params_.add(p + "b", std::move(b));
  }
  auto dense = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
    params_.add(name + ".w", diff::xavier_uniform(in, out, in, out, rng));
    params_.add(name + ".b", Matrix::Zero(1, out));
  };
  Eigen::Index width = 3 * h + static_cast<Eigen::Index>(config_.scalar_features);
  for (std::size_t k = 0; k < config_.trunk.size(); ++k) {
    const auto out = static_cast<Eigen::Index>(config_.trunk[k]);
    dense(fmt::format("trunk{}", k), width, out);
    width = out;
  }
  const auto hh = static_cast<Eigen::Index>(config_.head_hidden);
  dense("value.hidden", width, hh);
  dense("value.out", hh, 1);
  for (std::size_t d = 0; d < config_.branches; ++d) {
    dense(fmt::format("adv{}.hidden", d), width, hh);
    dense(fmt::format("adv{}.out", d), hh, static_cast<Eigen::Index>(config_.levels));
  }
}

std::vector<Graph::Id> BdqNetwork::forward(Graph& g,
                                           const std::vector<const Observation*>& batch) {
  if (batch.empty()) throw ValidationError("empty observation batch");
  const auto rows = static_cast<Eigen::Index>(batch.size());
  const auto window = static_cast<Eigen::Index>(config_.window);
  const auto scalars = static_cast<Eigen::Index>(config_.scalar_features);
  for (const Observation* o : batch) {
    if (o->history.rows() != window || o->history.cols() != 3 || o->scalars.size() != scalars) {
      throw ValidationError(fmt::format(
          "observation is {}x{} + {} scalars, network expects {}x3 + {}", o->history.rows(),
          o->history.cols(), o->scalars.size(), window, scalars));
    }
  }
  std::vector<Graph::Id> features;
  for (int c = 0; c < 3; ++c) {
    std::vector<Graph::Id> seq;
    for (Eigen::Index t = 0; t < window; ++t) {
      Matrix x(rows, 1);
      for (Eigen::Index b = 0; b < rows; ++b) x(b, 0) = batch[static_cast<std::size_t>(b)]->history(t, c);
      seq.push_back(g.input(std::move(x)));
    }
    const std::string p = fmt::format("enc{}.", c);
    features.push_back(g.lstm(seq, params_.at(p + "wx"), params_.at(p + "wh"), params_.at(p + "b")));
  }
  Matrix s(rows, scalars);
  for (Eigen::Index b = 0; b < rows; ++b) s.row(b) = batch[static_cast<std::size_t>(b)]->scalars.transpose();
  features.push_back(g.input(std::move(s)));

  auto layer = [&](Graph::Id x, const std::string& name, Activation act) {
    return g.dense(x, params_.at(name + ".w"), params_.at(name + ".b"), act);
  };
  Graph::Id z = g.concat(features);
  for (std::size_t k = 0; k < config_.trunk.size(); ++k) {
    z = layer(z, fmt::format("trunk{}", k), Activation::kRelu);
  }
  const Graph::Id v =
      layer(layer(z, "value.hidden", Activation::kRelu), "value.out", Activation::kIdentity);
  std::vector<Graph::Id> q;
  for (std::size_t d = 0; d < config_.branches; ++d) {
    const Graph::Id a = layer(layer(z, fmt::format("adv{}.hidden", d), Activation::kRelu),
                              fmt::format("adv{}.out", d), Activation::kIdentity);
    q.push_back(g.dueling(v, a));
  }
  return q;
}

std::vector<Eigen::MatrixXd> BdqNetwork::q_values(
    const std::vector<const Observation*>& batch) const {
  Graph g;
  // The graph only reads parameter values here; no backward pass is run.
  const auto q = const_cast<BdqNetwork*>(this)->forward(g, batch);
  std::vector<Eigen::MatrixXd> out(batch.size(),
                                   Eigen::MatrixXd(static_cast<Eigen::Index>(config_.branches),
                                                   static_cast<Eigen::Index>(config_.levels)));
  for (std::size_t d = 0; d < q.size(); ++d) {
    const Matrix& m = g.value(q[d]);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      out[b].row(static_cast<Eigen::Index>(d)) = m.row(static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

Eigen::MatrixXd BdqNetwork::q_values(const Observation& obs) const {
  return q_values(std::vector<const Observation*>{&obs})[0];
}

std::vector<std::size_t> select_action(const Eigen::MatrixXd& q, double eps,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<Eigen::Index> level(0, q.cols() - 1);
  std::vector<std::size_t> out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index d = 0; d < q.rows(); ++d) {
    Eigen::Index best = 0;
    if (eps > 0.0 && u(rng) < eps) {
      best = level(rng);
    } else {
      q.row(d).maxCoeff(&best);  // first maximum
    }
    out[static_cast<std::size_t>(d)] = static_cast<std::size_t>(best);
  }
  return out;
}

double td_target(double reward, bool terminal, double gamma, const Eigen::MatrixXd& q_main_next,
                 const Eigen::MatrixXd& q_target_next) {
  if (terminal) return reward;
  double acc = 0.0;
  for (Eigen::Index d = 0; d < q_main_next.rows(); ++d) {
    Eigen::Index best = 0;
    q_main_next.row(d).maxCoeff(&best);
    acc += q_target_next(d, best);
  }
  return reward + gamma * acc / static_cast<double>(q_main_next.rows());
}

Eigen::VectorXd td_targets(const std::vector<const Transition*>& batch, const BdqNetwork& main,
                           const BdqNetwork& target, double gamma) {
  if (batch.empty()) throw ValidationError("empty transition batch");
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  std::vector<const Observation*> next;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i]->terminal) {
      y(static_cast<Eigen::Index>(i)) = batch[i]->reward;
    } else {
      next.push_back(&batch[i]->next);
      where.push_back(i);
    }
  }
  if (next.empty()) return y;
  const auto qm = main.q_values(next);
  const auto qt = target.q_values(next);
  for (std::size_t k = 0; k < where.size(); ++k) {
    const Transition& t = *batch[where[k]];
    y(static_cast<Eigen::Index>(where[k])) = td_target(t.reward, false, gamma, qm[k], qt[k]);
  }
  return y;
}

Graph::Id record_loss(Graph& g, const std::vector<const Transition*>& batch,
                      const std::vector<double>& weights, BdqNetwork& main,
                      const Eigen::VectorXd& targets, Eigen::VectorXd* td_errors) {
  const std::size_t b = batch.size();
  if (b == 0) throw ValidationError("empty transition batch");
  if (weights.size() != b || static_cast<std::size_t>(targets.size()) != b) {
    throw ValidationError("loss needs one weight and one target per transition");
  }
  const std::size_t n_br = main.config().branches;
  for (const Transition* t : batch) {
    if (t->actions.size() != n_br) throw ValidationError("transition action arity mismatch");
    for (std::size_t a : t->actions) {
      if (a >= main.config().levels) throw ValidationError("transition action out of range");
    }
  }
  std::vector<const Observation*> states;
  for (const Transition* t : batch) states.push_back(&t->state);
  const auto q = main.forward(g, states);
  const Graph::Id y = g.input(targets);
  Eigen::VectorXd abs_err = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b));
  Graph::Id sq = 0;
  for (std::size_t d = 0; d < n_br; ++d) {
    std::vector<std::size_t> cols;
    for (const Transition* t : batch) cols.push_back(t->actions[d]);
    const Graph::Id diff = g.sub(y, g.gather(q[d], cols));
    abs_err += g.value(diff).col(0).cwiseAbs();
    const Graph::Id s = g.square(diff);
    sq = d == 0 ? s : g.add(sq, s);
  }
  if (td_errors) *td_errors = abs_err / static_cast<double>(n_br);
  const Eigen::VectorXd w =
      Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(b)) /
      static_cast<double>(n_br);
  return g.mean(g.scale_rows(sq, w));
}

LossResult loss_and_grads(const std::vector<const Transition*>& batch,
                          const std::vector<double>& weights, BdqNetwork& main,
                          const Eigen::VectorXd& targets) {
  main.params().zero_grad();
  Graph g;
  LossResult res;
  res.targets = targets;
  const Graph::Id loss = record_loss(g, batch, weights, main, targets, &res.td_errors);
  res.loss = g.value(loss)(0, 0);
  g.backward(loss);
  return res;
}

LossResult loss_and_grads(const std::vector<const Transition*>& batch,
                          const std::vector<double>& weights, BdqNetwork& main,
                          const BdqNetwork& target, double gamma) {
  return loss_and_grads(batch, weights, main, td_targets(batch, main, target, gamma));
}

std::pair<std::uint64_t, std::uint64_t> output_count(const AgentConfig& config) {
  const std::uint64_t n = config.levels;
  const std::uint64_t branching = static_cast<std::uint64_t>(config.branches) * n;
  std::uint64_t flat = 1;
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t d = 0; d < config.branches; ++d) {
    if (n != 0 && flat > kMax / n) return {branching, kMax};
    flat *= n;
  }
  return {branching, flat};
}

}  // namespace branchgrid

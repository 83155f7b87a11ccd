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


// Branching dueling Q-network: three LSTM encoders (solar, wind, load)
// feed a shared relu trunk together with the scalar features; a value head
// and one advantage head per BESS produce
//
//   Q_d(s, b) = V(s) + A_d(s, b) - mean_b' A_d(s, b').

#ifndef BRANCHGRID_AGENT_HPP_
#define BRANCHGRID_AGENT_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "branchgrid/diffcore.hpp"
#include "branchgrid/env.hpp"
#include "branchgrid/replay.hpp"

namespace branchgrid {

struct AgentConfig {
  std::size_t branches = 1;
  std::size_t levels = 11;
  std::size_t window = 24;           // history steps per channel
  std::size_t scalar_features = 4;   // SoC per BESS + price + sin + cos
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::int64_t eps_decay_steps = 50000;
  std::size_t lstm_hidden = 32;
  std::vector<std::size_t> trunk = {128, 64};
  std::size_t head_hidden = 32;

  // Throws ValidationError.
  void validate() const;
  // Linear decay from eps_start to eps_end, then constant.
  double epsilon(std::int64_t step) const;
};

// Sizes taken from an environment; widths and schedule keep their defaults.
AgentConfig agent_config_for(const MicrogridEnv& env);

// V + A - rowmean(A) for an N x n advantage matrix.
Eigen::MatrixXd branch_q(double value, const Eigen::MatrixXd& advantages);

class BdqNetwork {
 public:
  BdqNetwork(AgentConfig config, std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  diff::ParamStore& params() { return params_; }
  const diff::ParamStore& params() const { return params_; }

  // Records the forward pass for a batch; returns one B x n node per branch.
  std::vector<diff::Graph::Id> forward(diff::Graph& g,
                                       const std::vector<const Observation*>& batch);

  // N x n Q matrix. Throws ValidationError on dimension mismatch.
  Eigen::MatrixXd q_values(const Observation& obs) const;
  std::vector<Eigen::MatrixXd> q_values(const std::vector<const Observation*>& batch) const;

 private:
  AgentConfig config_;
  diff::ParamStore params_;
};

struct TargetNetwork {
  BdqNetwork net;
  std::int64_t last_sync = 0;

  explicit TargetNetwork(const BdqNetwork& main) : net(main) {}
  void sync(const BdqNetwork& main, std::int64_t step) {
    net.params().copy_values_from(main.params());
    last_sync = step;
  }
};

// Per branch: uniform level with probability eps, else the lowest-index
// argmax of that row.
std::vector<std::size_t> select_action(const Eigen::MatrixXd& q, double eps,
                                       std::mt19937_64& rng);

// r + gamma * mean_d q_target(d, argmax_b q_main(d, b)); r when terminal.
double td_target(double reward, bool terminal, double gamma, const Eigen::MatrixXd& q_main_next,
                 const Eigen::MatrixXd& q_target_next);

Eigen::VectorXd td_targets(const std::vector<const Transition*>& batch, const BdqNetwork& main,
                           const BdqNetwork& target, double gamma);

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd targets;
  Eigen::VectorXd td_errors;  // mean_d |y - Q_d| per transition
};

// Records the loss below on `g` and returns its 1x1 node. `td_errors`, if
// given, receives mean_d |y - Q_d| per transition.
diff::Graph::Id record_loss(diff::Graph& g, const std::vector<const Transition*>& batch,
                            const std::vector<double>& weights, BdqNetwork& main,
                            const Eigen::VectorXd& targets, Eigen::VectorXd* td_errors = nullptr);

// (1/B) sum_i w_i (1/N) sum_d (y_i - Q_d(s_i, a_id))^2, with gradients
// left in main.params() (zeroed first).
LossResult loss_and_grads(const std::vector<const Transition*>& batch,
                          const std::vector<double>& weights, BdqNetwork& main,
                          const Eigen::VectorXd& targets);
LossResult loss_and_grads(const std::vector<const Transition*>& batch,
                          const std::vector<double>& weights, BdqNetwork& main,
                          const BdqNetwork& target, double gamma);

// (N * n, n^N); the second saturates at UINT64_MAX.
std::pair<std::uint64_t, std::uint64_t> output_count(const AgentConfig& config);

}  // namespace branchgrid

#endif  // BRANCHGRID_AGENT_HPP_

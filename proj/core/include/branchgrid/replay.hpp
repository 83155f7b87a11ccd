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


// Proportional prioritized experience replay backed by a sum tree.

#ifndef BRANCHGRID_REPLAY_HPP_
#define BRANCHGRID_REPLAY_HPP_

#include <cstddef>
#include <random>
#include <vector>

#include "branchgrid/env.hpp"

namespace branchgrid {

struct Transition {
  Observation state;
  std::vector<std::size_t> actions;  // one level index per branch
  double reward = 0.0;
  Observation next;
  bool terminal = false;
};

// Complete binary tree over a power-of-two number of leaves. Internal
// nodes hold child sums; a parallel tree holds child maxima.
class SumTree {
 public:
  explicit SumTree(std::size_t min_leaves = 1);

  std::size_t leaves() const { return leaves_; }
  void set(std::size_t leaf, double priority);
  double get(std::size_t leaf) const { return sum_[leaves_ + leaf]; }
  double total() const { return sum_[1]; }
  double max() const { return max_[1]; }
  // Leaf whose cumulative range contains `mass`; never a zero leaf when
  // total() > 0.
  std::size_t find(double mass) const;
  // Largest |node - (left + right)| over internal nodes.
  double max_structural_error() const;

 private:
  std::size_t leaves_;
  std::vector<double> sum_, max_;  // 1-based heap layout
};

struct ReplayConfig {
  std::size_t capacity = 100000;
  double alpha = 0.6;
  double eps_p = 0.01;
};

struct ReplaySample {
  std::vector<const Transition*> batch;
  std::vector<double> weights;
  std::vector<std::size_t> indices;
};

class PrioritizedReplay {
 public:
  explicit PrioritizedReplay(ReplayConfig config = {});

  const ReplayConfig& config() const { return config_; }
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return config_.capacity; }

  // Inserts at the current maximum priority (1.0 when empty), overwriting
  // the oldest entry once full.
  void push(Transition t);

  // Stratified proportional draw of k entries. Weights are
  // (size * P(i))^-beta divided by their batch maximum. Throws Underfilled.
  ReplaySample sample(std::size_t k, double beta, std::mt19937_64& rng) const;

  // priority = (|td| + eps_p)^alpha. Throws std::out_of_range.
  void update_priorities(const std::vector<std::size_t>& indices,
                         const std::vector<double>& td_errors);

  double priority(std::size_t index) const { return tree_.get(index); }
  const Transition& at(std::size_t index) const { return data_.at(index); }
  const SumTree& tree() const { return tree_; }

 private:
  ReplayConfig config_;
  SumTree tree_;
  std::vector<Transition> data_;
  std::size_t cursor_ = 0, size_ = 0;
};

// Linear annealing of beta from `start` to `end` as progress goes 0 -> 1.
double anneal_beta(double start, double end, double progress);

}  // namespace branchgrid

#endif  // BRANCHGRID_REPLAY_HPP_

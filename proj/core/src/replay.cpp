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


#include "branchgrid/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "branchgrid/errors.hpp"

namespace branchgrid {

SumTree::SumTree(std::size_t min_leaves) : leaves_(1) {
  while (leaves_ < min_leaves) leaves_ *= 2;
  sum_.assign(2 * leaves_, 0.0);
  max_.assign(2 * leaves_, 0.0);
}

void SumTree::set(std::size_t leaf, double priority) {
  if (leaf >= leaves_) throw std::out_of_range(fmt::format("sum tree leaf {} out of range", leaf));
  if (!(priority >= 0.0) || !std::isfinite(priority)) {
    throw ValidationError("priority must be finite and non-negative");
  }
  std::size_t i = leaves_ + leaf;
  sum_[i] = max_[i] = priority;
  for (i /= 2; i >= 1; i /= 2) {
    sum_[i] = sum_[2 * i] + sum_[2 * i + 1];
    max_[i] = std::max(max_[2 * i], max_[2 * i + 1]);
  }
}

std::size_t SumTree::find(double mass) const {
  std::size_t i = 1;
  while (i < leaves_) {
    const double left = sum_[2 * i];
    const double right = sum_[2 * i + 1];
    if ((mass < left && left > 0.0) || right <= 0.0) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  return i - leaves_;
}

double SumTree::max_structural_error() const {
  double err = 0.0;
  for (std::size_t i = 1; i < leaves_; ++i) {
    err = std::max(err, std::abs(sum_[i] - (sum_[2 * i] + sum_[2 * i + 1])));
  }
  return err;
}

PrioritizedReplay::PrioritizedReplay(ReplayConfig config)
    : config_(config), tree_(std::max<std::size_t>(config.capacity, 1)) {
  if (config_.capacity == 0) throw ValidationError("replay capacity must be positive");
  if (!(config_.alpha >= 0.0) || !(config_.eps_p > 0.0)) {
    throw ValidationError("replay needs alpha >= 0 and eps_p > 0");
  }
  data_.reserve(std::min<std::size_t>(config_.capacity, 1 << 16));
}

void PrioritizedReplay::push(Transition t) {
  const double p = size_ == 0 ? 1.0 : tree_.max();
  if (data_.size() < config_.capacity) {
    data_.push_back(std::move(t));
  } else {
    data_[cursor_] = std::move(t);
  }
  tree_.set(cursor_, p);
  cursor_ = (cursor_ + 1) % config_.capacity;
  size_ = std::min(size_ + 1, config_.capacity);
}

ReplaySample PrioritizedReplay::sample(std::size_t k, double beta, std::mt19937_64& rng) const {
  if (k == 0 || size_ < k) {
    throw Underfilled(fmt::format("replay holds {} transitions, {} requested", size_, k));
  }
  ReplaySample out;
  const double total = tree_.total();
  const double seg = total / static_cast<double>(k);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double wmax = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double mass = std::min((static_cast<double>(i) + u(rng)) * seg, total);
    const std::size_t leaf = std::min(tree_.find(mass), size_ - 1);
    const double prob = tree_.get(leaf) / total;
    const double w = std::pow(static_cast<double>(size_) * prob, -beta);
    wmax = std::max(wmax, w);
    out.indices.push_back(leaf);
    out.weights.push_back(w);
    out.batch.push_back(&data_[leaf]);
  }
  for (double& w : out.weights) w /= wmax;
  return out;
}

void PrioritizedReplay::update_priorities(const std::vector<std::size_t>& indices,
                                          const std::vector<double>& td_errors) {
  if (indices.size() != td_errors.size()) {
    throw ValidationError("priority update needs one td error per index");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size_) {
      throw std::out_of_range(fmt::format("replay index {} out of range (size {})", indices[i], size_));
    }
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    tree_.set(indices[i], std::pow(std::abs(td_errors[i]) + config_.eps_p, config_.alpha));
  }
}

double anneal_beta(double start, double end, double progress) {
  const double f = std::clamp(progress, 0.0, 1.0);
  return start + (end - start) * f;
}

}  // namespace branchgrid

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


// Small reverse-mode automatic differentiation over dense matrices.
// Activations are laid out batch x features. A Graph is a single-use tape:
// build it, read values, call backward() once on a 1x1 node.

#ifndef BRANCHGRID_DIFFCORE_HPP_
#define BRANCHGRID_DIFFCORE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace branchgrid::diff {

using Matrix = Eigen::MatrixXd;

struct Param {
  std::string name;
  Matrix value, grad;
  Matrix m, v;  // Adam moments
  std::int64_t step = 0;
};

// Named parameters in insertion order. References stay valid.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);

  Param& add(const std::string& name, Matrix init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }
  Param& operator[](std::size_t i) { return *params_[i]; }
  const Param& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t value_count() const;
  void zero_grad();
  // Values only, concatenated in insertion order, column-major per tensor.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& values);
  // Copies values (not Adam state) from a store with identical layout.
  void copy_values_from(const ParamStore& other);

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, std::size_t> index_;
};

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out,
                      std::mt19937_64& rng);

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

class Graph {
 public:
  using Id = std::size_t;

  Id input(Matrix value);
  // Gradients flowing into this node accumulate into p.grad.
  Id param(Param& p);

  // act(x W + b); W is in x out, b is 1 x out.
  Id dense(Id x, Param& w, Param& b, Activation act);
  // Runs an LSTM over `sequence` (each step batch x features) from zero
  // state and returns the last hidden state. Gate order in the 4h columns
  // of wx, wh, b: input, forget, candidate, output.
  Id lstm(const std::vector<Id>& sequence, Param& wx, Param& wh, Param& b);
  Id concat(const std::vector<Id>& parts);  // along columns
  // v (batch x 1) + a - rowmean(a).
  Id dueling(Id v, Id a);
  // Picks column cols[r] of row r: batch x 1.
  Id gather(Id a, const std::vector<std::size_t>& cols);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale_rows(Id a, const Eigen::VectorXd& w);
  Id square(Id a);
  Id mean(Id a);  // 1 x 1
  Id activate(Id a, Activation act);

  const Matrix& value(Id id) const { return nodes_[id].value; }
  const Matrix& grad(Id id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  void backward(Id root);

  // Sign pattern of every relu pre-activation, in creation order.
  const std::vector<bool>& kink_signature() const { return kinks_; }

 private:
  struct Node {
    Matrix value, grad;
    std::function<void(Graph&)> back;
  };
  Id push(Matrix value, std::function<void(Graph&)> back = {});
  Matrix& g(Id id);

  std::vector<Node> nodes_;
  std::vector<bool> kinks_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam on every parameter's current grad.
void adam_step(ParamStore& store, const AdamConfig& config);

// Applies `grads` (same names and shapes as the store) and steps Adam.
// Throws ValidationError on any mismatch.
void adam_step(ParamStore& store, const std::map<std::string, Matrix>& grads,
               const AdamConfig& config);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]"
  // Coordinates skipped because a relu changed sign inside +-step.
  std::vector<std::string> exemptions;
  std::size_t checked = 0;
};

// The objective builds its graph from `store` and returns the scalar node.
using Objective = std::function<Graph::Id(Graph&)>;

// Central differences over every parameter coordinate. Relative error is
// |a - n| / max(|a|, |n|, floor).
GradCheckResult grad_check(const Objective& objective, ParamStore& store, double step = 1e-5,
                           double floor = 1e-4);

}  // namespace branchgrid::diff

#endif  // BRANCHGRID_DIFFCORE_HPP_

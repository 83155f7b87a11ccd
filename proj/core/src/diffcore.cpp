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


#include "branchgrid/diffcore.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "branchgrid/errors.hpp"

namespace branchgrid::diff {
namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Matrix apply(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::kIdentity: return z;
    case Activation::kRelu: return z.cwiseMax(0.0);
    case Activation::kTanh: return z.array().tanh().matrix();
    case Activation::kSigmoid: return sigmoid(z);
  }
  return z;
}

// d act / d z expressed through the output y.
Matrix derivative(const Matrix& z, const Matrix& y, Activation act) {
  switch (act) {
    case Activation::kIdentity: return Matrix::Ones(z.rows(), z.cols());
    case Activation::kRelu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh: return (1.0 - y.array().square()).matrix();
    case Activation::kSigmoid: return (y.array() * (1.0 - y.array())).matrix();
  }
  return Matrix::Ones(z.rows(), z.cols());
}

void ensure_grad(Param& p) {
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
    p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
  }
}

void shape_check(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("shape mismatch in " + what);
}

}  // namespace

ParamStore::ParamStore(const ParamStore& other) { *this = other; }

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this == &other) return *this;
  params_.clear();
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Param>(*p));
  index_ = other.index_;
  return *this;
}

Param& ParamStore::add(const std::string& name, Matrix init) {
  if (index_.count(name)) throw ValidationError("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Param>();
  p->name = name;
  p->grad = Matrix::Zero(init.rows(), init.cols());
  p->m = Matrix::Zero(init.rows(), init.cols());
  p->v = Matrix::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::size_t ParamStore::value_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero(p->value.rows(), p->value.cols());
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> out;
  out.reserve(value_count());
  for (const auto& p : params_) out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

void ParamStore::unflatten(const std::vector<double>& values) {
  if (values.size() != value_count()) {
    throw ValidationError(fmt::format("parameter payload has {} values, expected {}",
                                      values.size(), value_count()));
  }
  std::size_t off = 0;
  for (auto& p : params_) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), p->value.size(), p->value.data());
    off += static_cast<std::size_t>(p->value.size());
  }
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.size() != size()) throw ValidationError("parameter stores differ in layout");
  for (std::size_t i = 0; i < size(); ++i) {
    auto& a = *params_[i];
    const auto& b = other[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) {
      throw ValidationError("parameter stores differ at '" + a.name + "'");
    }
    a.value = b.value;
  }
}

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out,
                      std::mt19937_64& rng) {
  const double lim = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-lim, lim);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  }
  return m;
}

Graph::Id Graph::push(Matrix value, std::function<void(Graph&)> back) {
  nodes_.push_back({std::move(value), Matrix(), std::move(back)});
  return nodes_.size() - 1;
}

Matrix& Graph::g(Id id) {
  auto& n = nodes_[id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

Graph::Id Graph::input(Matrix value) { return push(std::move(value)); }

Graph::Id Graph::param(Param& p) {
  ensure_grad(p);
  const Id id = push(p.value);
  nodes_[id].back = [id, &p](Graph& gr) { p.grad += gr.g(id); };
  return id;
}

Graph::Id Graph::dense(Id x, Param& w, Param& b, Activation act) {
  const Matrix& xv = value(x);
  shape_check(xv.cols() == w.value.rows() && b.value.rows() == 1 &&
                  b.value.cols() == w.value.cols(),
              "dense");
  ensure_grad(w);
  ensure_grad(b);
  Matrix z = xv * w.value;
  z.rowwise() += b.value.row(0);
  if (act == Activation::kRelu) {
    for (Eigen::Index i = 0; i < z.size(); ++i) kinks_.push_back(z.data()[i] > 0.0);
  }
  Matrix y = apply(z, act);
  const Id id = push(y);
  auto zs = std::make_shared<Matrix>(std::move(z));
  nodes_[id].back = [id, x, &w, &b, act, zs](Graph& gr) {
    const Matrix dz = gr.g(id).cwiseProduct(derivative(*zs, gr.value(id), act));
    w.grad.noalias() += gr.value(x).transpose() * dz;
    b.grad += dz.colwise().sum();
    gr.g(x).noalias() += dz * w.value.transpose();
  };
  return id;
}

Graph::Id Graph::lstm(const std::vector<Id>& sequence, Param& wx, Param& wh, Param& b) {
  shape_check(!sequence.empty(), "lstm (empty sequence)");
  const Eigen::Index h = wh.value.rows();
  const Eigen::Index batch = value(sequence[0]).rows();
  shape_check(wh.value.cols() == 4 * h && wx.value.cols() == 4 * h && b.value.rows() == 1 &&
                  b.value.cols() == 4 * h,
              "lstm");
  for (Id s : sequence) {
    shape_check(value(s).rows() == batch && value(s).cols() == wx.value.rows(), "lstm input");
  }
  ensure_grad(wx);
  ensure_grad(wh);
  ensure_grad(b);

  struct Cache {
    std::vector<Matrix> i, f, gg, o, c, tc, h;  // h[0], c[0] are the zero state
  };
  auto cache = std::make_shared<Cache>();
  cache->h.push_back(Matrix::Zero(batch, h));
  cache->c.push_back(Matrix::Zero(batch, h));
  for (Id s : sequence) {
    Matrix z = value(s) * wx.value + cache->h.back() * wh.value;
    z.rowwise() += b.value.row(0);
    Matrix ig = sigmoid(z.middleCols(0, h));
    Matrix fg = sigmoid(z.middleCols(h, h));
    Matrix cg = z.middleCols(2 * h, h).array().tanh().matrix();
    Matrix og = sigmoid(z.middleCols(3 * h, h));
    Matrix c = fg.cwiseProduct(cache->c.back()) + ig.cwiseProduct(cg);
    Matrix tc = c.array().tanh().matrix();
    Matrix hn = og.cwiseProduct(tc);
    cache->i.push_back(std::move(ig));
    cache->f.push_back(std::move(fg));
    cache->gg.push_back(std::move(cg));
    cache->o.push_back(std::move(og));
    cache->c.push_back(std::move(c));
    cache->tc.push_back(std::move(tc));
    cache->h.push_back(std::move(hn));
  }
  const Id id = push(cache->h.back());
  nodes_[id].back = [id, sequence, &wx, &wh, &b, cache, h](Graph& gr) {
    Matrix dh = gr.g(id);
    Matrix dc = Matrix::Zero(dh.rows(), dh.cols());
    Matrix dz(dh.rows(), 4 * h);
    for (std::size_t t = sequence.size(); t-- > 0;) {
      const Matrix& ig = cache->i[t];
      const Matrix& fg = cache->f[t];
      const Matrix& cg = cache->gg[t];
      const Matrix& og = cache->o[t];
      const Matrix& tc = cache->tc[t];
      dc += dh.cwiseProduct(og).cwiseProduct((1.0 - tc.array().square()).matrix());
      const Matrix d_o = dh.cwiseProduct(tc);
      dz.middleCols(0, h) = dc.cwiseProduct(cg).cwiseProduct((ig.array() * (1.0 - ig.array())).matrix());
      dz.middleCols(h, h) =
          dc.cwiseProduct(cache->c[t]).cwiseProduct((fg.array() * (1.0 - fg.array())).matrix());
      dz.middleCols(2 * h, h) = dc.cwiseProduct(ig).cwiseProduct((1.0 - cg.array().square()).matrix());
      dz.middleCols(3 * h, h) = d_o.cwiseProduct((og.array() * (1.0 - og.array())).matrix());
      const Id s = sequence[t];
      wx.grad.noalias() += gr.value(s).transpose() * dz;
      wh.grad.noalias() += cache->h[t].transpose() * dz;
      b.grad += dz.colwise().sum();
      gr.g(s).noalias() += dz * wx.value.transpose();
      dh = dz * wh.value.transpose();
      dc = dc.cwiseProduct(fg);
    }
  };
  return id;
}

Graph::Id Graph::concat(const std::vector<Id>& parts) {
  shape_check(!parts.empty(), "concat");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Id p : parts) {
    shape_check(value(p).rows() == rows, "concat");
    cols += value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (Id p : parts) {
    out.middleCols(off, value(p).cols()) = value(p);
    off += value(p).cols();
  }
  const Id id = push(std::move(out));
  nodes_[id].back = [id, parts](Graph& gr) {
    Eigen::Index o = 0;
    for (Id p : parts) {
      const Eigen::Index c = gr.value(p).cols();
      gr.g(p) += gr.g(id).middleCols(o, c);
      o += c;
    }
  };
  return id;
}

Graph::Id Graph::dueling(Id v, Id a) {
  const Matrix& vv = value(v);
  const Matrix& av = value(a);
  shape_check(vv.cols() == 1 && vv.rows() == av.rows(), "dueling");
  const Eigen::VectorXd mean = av.rowwise().mean();
  Matrix q = av.colwise() - mean;
  q.colwise() += vv.col(0);
  const Id id = push(std::move(q));
  nodes_[id].back = [id, v, a](Graph& gr) {
    const Matrix& dq = gr.g(id);
    const Eigen::VectorXd row = dq.rowwise().sum();
    gr.g(v).col(0) += row;
    const double n = static_cast<double>(dq.cols());
    Matrix da = dq;
    da.colwise() -= row / n;
    gr.g(a) += da;
  };
  return id;
}

Graph::Id Graph::gather(Id a, const std::vector<std::size_t>& cols) {
  const Matrix& av = value(a);
  shape_check(static_cast<Eigen::Index>(cols.size()) == av.rows(), "gather");
  Matrix out(av.rows(), 1);
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    shape_check(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(r)]) < av.cols(), "gather");
    out(r, 0) = av(r, static_cast<Eigen::Index>(cols[static_cast<std::size_t>(r)]));
  }
  const Id id = push(std::move(out));
  nodes_[id].back = [id, a, cols](Graph& gr) {
    Matrix& ga = gr.g(a);
    const Matrix& go = gr.g(id);
    for (Eigen::Index r = 0; r < go.rows(); ++r) {
      ga(r, static_cast<Eigen::Index>(cols[static_cast<std::size_t>(r)])) += go(r, 0);
    }
  };
  return id;
}

Graph::Id Graph::add(Id a, Id b) {
  shape_check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add");
  const Id id = push(value(a) + value(b));
  nodes_[id].back = [id, a, b](Graph& gr) {
    gr.g(a) += gr.g(id);
    gr.g(b) += gr.g(id);
  };
  return id;
}

Graph::Id Graph::sub(Id a, Id b) {
  shape_check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "sub");
  const Id id = push(value(a) - value(b));
  nodes_[id].back = [id, a, b](Graph& gr) {
    gr.g(a) += gr.g(id);
    gr.g(b) -= gr.g(id);
  };
  return id;
}

Graph::Id Graph::mul(Id a, Id b) {
  shape_check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "mul");
  const Id id = push(value(a).cwiseProduct(value(b)));
  nodes_[id].back = [id, a, b](Graph& gr) {
    gr.g(a) += gr.g(id).cwiseProduct(gr.value(b));
    gr.g(b) += gr.g(id).cwiseProduct(gr.value(a));
  };
  return id;
}

Graph::Id Graph::scale_rows(Id a, const Eigen::VectorXd& w) {
  shape_check(w.size() == value(a).rows(), "scale_rows");
  const Id id = push(w.asDiagonal() * value(a));
  nodes_[id].back = [id, a, w](Graph& gr) { gr.g(a) += w.asDiagonal() * gr.g(id); };
  return id;
}

Graph::Id Graph::square(Id a) {
  const Id id = push(value(a).array().square().matrix());
  nodes_[id].back = [id, a](Graph& gr) {
    gr.g(a) += 2.0 * gr.g(id).cwiseProduct(gr.value(a));
  };
  return id;
}

Graph::Id Graph::mean(Id a) {
  const double n = static_cast<double>(value(a).size());
  shape_check(n > 0, "mean");
  Matrix out(1, 1);
  out(0, 0) = value(a).mean();
  const Id id = push(std::move(out));
  nodes_[id].back = [id, a, n](Graph& gr) { gr.g(a).array() += gr.g(id)(0, 0) / n; };
  return id;
}

Graph::Id Graph::activate(Id a, Activation act) {
  const Matrix& z = value(a);
  if (act == Activation::kRelu) {
    for (Eigen::Index i = 0; i < z.size(); ++i) kinks_.push_back(z.data()[i] > 0.0);
  }
  const Id id = push(apply(z, act));
  nodes_[id].back = [id, a, act](Graph& gr) {
    gr.g(a) += gr.g(id).cwiseProduct(derivative(gr.value(a), gr.value(id), act));
  };
  return id;
}

void Graph::backward(Id root) {
  shape_check(value(root).size() == 1, "backward (root must be 1x1)");
  g(root)(0, 0) += 1.0;
  for (Id id = root + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (n.back && n.grad.size() == n.value.size() && n.grad.size() > 0) n.back(*this);
  }
}

void adam_step(ParamStore& store, const AdamConfig& c) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw ValidationError("gradient shape mismatch for '" + p.name + "'");
    }
    ++p.step;
    p.m = c.beta1 * p.m + (1.0 - c.beta1) * p.grad;
    p.v = c.beta2 * p.v + (1.0 - c.beta2) * p.grad.cwiseProduct(p.grad);
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(p.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(p.step));
    p.value.array() -= c.lr * (p.m.array() / bc1) / ((p.v.array() / bc2).sqrt() + c.eps);
  }
}

void adam_step(ParamStore& store, const std::map<std::string, Matrix>& grads,
               const AdamConfig& config) {
  if (grads.size() != store.size()) throw ValidationError("gradient set does not match store");
  for (std::size_t i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    auto it = grads.find(p.name);
    if (it == grads.end()) throw ValidationError("missing gradient for '" + p.name + "'");
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw ValidationError("gradient shape mismatch for '" + p.name + "'");
    }
    p.grad = it->second;
  }
  adam_step(store, config);
}

GradCheckResult grad_check(const Objective& objective, ParamStore& store, double step,
                           double floor) {
  GradCheckResult res;
  store.zero_grad();
  std::vector<bool> base_kinks;
  {
    Graph g;
    const auto root = objective(g);
    g.backward(root);
    base_kinks = g.kink_signature();
  }
  std::vector<Matrix> analytic;
  for (std::size_t i = 0; i < store.size(); ++i) analytic.push_back(store[i].grad);

  auto eval = [&](std::vector<bool>& kinks) {
    Graph g;
    const auto root = objective(g);
    kinks = g.kink_signature();
    return g.value(root)(0, 0);
  };
  std::vector<bool> kp, km;
  for (std::size_t i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      double& x = p.value.data()[k];
      const double orig = x;
      x = orig + step;
      const double fp = eval(kp);
      x = orig - step;
      const double fm = eval(km);
      x = orig;
      const std::string where = fmt::format("{}[{}]", p.name, k);
      if (kp != base_kinks || km != base_kinks) {
        res.exemptions.push_back(where);
        continue;
      }
      const double num = (fp - fm) / (2.0 * step);
      const double ana = analytic[i].data()[k];
      const double rel =
          std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor});
      ++res.checked;
      if (rel > res.max_rel_error || res.worst.empty()) {
        res.max_rel_error = std::max(res.max_rel_error, rel);
        if (rel >= res.max_rel_error) res.worst = where;
      }
    }
  }
  store.zero_grad();
  return res;
}

}  // namespace branchgrid::diff

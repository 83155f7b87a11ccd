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

// Infeasible-start primal-dual interior-point method for
//
//   min c'x  s.t.  Ax = b,  Gx + s = h,  s in K = R+^l x Q^{q_1} x ...
//
// Each iteration solves the quasi-definite KKT system
//
//   [ 0  A'  G'   ] [dx]   [rx]
//   [ A  0   0    ] [dy] = [ry]
//   [ G  0  -W'W  ] [dz]   [rz']
//
// by sparse LDL' with static regularisation and iterative refinement
// against the unregularised matrix.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <fmt/format.h>

#include "branchgrid/cone_program.hpp"
#include "branchgrid/errors.hpp"

namespace branchgrid {
namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct SocBlock {
  int offset = 0;
  int dim = 0;
};

struct StandardForm {
  int n = 0, p = 0, m = 0;
  SpMat A, G;
  VectorXd c, b, h;
  int lp_dim = 0;
  std::vector<SocBlock> socs;
  double cscale = 1.0;
  int degree() const { return lp_dim + static_cast<int>(socs.size()); }
};

StandardForm to_standard_form(const ConeProgram& prog) {
  StandardForm f;
  f.n = static_cast<int>(prog.num_vars());
  std::vector<Triplet> a_trip, g_trip;
  std::vector<double> b, h;

  for (const auto& row : prog.equalities()) {
    for (const auto& t : row.terms) a_trip.emplace_back(static_cast<int>(b.size()), t.var, t.coef);
    b.push_back(row.rhs);
  }
  for (int j = 0; j < f.n; ++j) {
    if (prog.lower()[j] == prog.upper()[j]) {
      a_trip.emplace_back(static_cast<int>(b.size()), j, 1.0);
      b.push_back(prog.lower()[j]);
    }
  }
  for (const auto& row : prog.inequalities()) {
    for (const auto& t : row.terms) g_trip.emplace_back(static_cast<int>(h.size()), t.var, t.coef);
    h.push_back(row.rhs);
  }
  for (int j = 0; j < f.n; ++j) {
    const double lo = prog.lower()[j];
    const double hi = prog.upper()[j];
    if (lo == hi) continue;
    if (std::isfinite(lo)) {
      g_trip.emplace_back(static_cast<int>(h.size()), j, -1.0);
      h.push_back(-lo);
    }
    if (std::isfinite(hi)) {
      g_trip.emplace_back(static_cast<int>(h.size()), j, 1.0);
      h.push_back(hi);
    }
  }
  f.lp_dim = static_cast<int>(h.size());

  // Cone rows: s = T x, i.e. G = -T, h = 0.
  for (const auto& cone : prog.cones()) {
    SocBlock blk{static_cast<int>(h.size()), 0};
    const auto& mem = cone.members;
    if (cone.kind == ConeKind::kStandard) {
      for (const auto& mm : mem) {
        g_trip.emplace_back(static_cast<int>(h.size()), mm.var, -mm.scale);
        h.push_back(0.0);
      }
    } else {
      // 2 u w >= ||z||^2  <=>  (u + w, u - w, sqrt2 z) in Q.
      const int r0 = static_cast<int>(h.size());
      g_trip.emplace_back(r0, mem[0].var, -mem[0].scale);
      g_trip.emplace_back(r0, mem[1].var, -mem[1].scale);
      g_trip.emplace_back(r0 + 1, mem[0].var, -mem[0].scale);
      g_trip.emplace_back(r0 + 1, mem[1].var, mem[1].scale);
      h.push_back(0.0);
      h.push_back(0.0);
      for (std::size_t i = 2; i < mem.size(); ++i) {
        g_trip.emplace_back(static_cast<int>(h.size()), mem[i].var,
                            -std::sqrt(2.0) * mem[i].scale);
        h.push_back(0.0);
      }
    }
    blk.dim = static_cast<int>(h.size()) - blk.offset;
    f.socs.push_back(blk);
  }

  f.p = static_cast<int>(b.size());
  f.m = static_cast<int>(h.size());
  f.A.resize(f.p, f.n);
  f.A.setFromTriplets(a_trip.begin(), a_trip.end());
  f.G.resize(f.m, f.n);
  f.G.setFromTriplets(g_trip.begin(), g_trip.end());
  f.b = Eigen::Map<const VectorXd>(b.data(), f.p);
  f.h = Eigen::Map<const VectorXd>(h.data(), f.m);
  f.c = Eigen::Map<const VectorXd>(prog.objective().data(), f.n);
  const double cmax = f.c.size() ? f.c.cwiseAbs().maxCoeff() : 0.0;
  f.cscale = std::max(1.0, cmax);
  f.c /= f.cscale;
  return f;
}

// ---- Cone algebra over K = R+^l x Q x ... ----------------------------------

double soc_det(const VectorXd& v, const SocBlock& k) {
  // (u0 - |u1|)(u0 + |u1|) keeps accuracy close to the boundary.
  const double head = v[k.offset];
  const double tail = v.segment(k.offset + 1, k.dim - 1).norm();
  return (head - tail) * (head + tail);
}

VectorXd jordan_product(const VectorXd& u, const VectorXd& v, const StandardForm& f) {
  VectorXd w(f.m);
  w.head(f.lp_dim) = u.head(f.lp_dim).cwiseProduct(v.head(f.lp_dim));
  for (const auto& k : f.socs) {
    const auto us = u.segment(k.offset, k.dim);
    const auto vs = v.segment(k.offset, k.dim);
    w[k.offset] = us.dot(vs);
    w.segment(k.offset + 1, k.dim - 1) =
        us[0] * vs.tail(k.dim - 1) + vs[0] * us.tail(k.dim - 1);
  }
  return w;
}

// Solves lambda o x = r for x.
VectorXd jordan_divide(const VectorXd& lambda, const VectorXd& r, const StandardForm& f) {
  VectorXd x(f.m);
  x.head(f.lp_dim) = r.head(f.lp_dim).cwiseQuotient(lambda.head(f.lp_dim));
  for (const auto& k : f.socs) {
    const auto l = lambda.segment(k.offset, k.dim);
    const auto rs = r.segment(k.offset, k.dim);
    const double det = soc_det(lambda, k);
    const double x0 = (l[0] * rs[0] - l.tail(k.dim - 1).dot(rs.tail(k.dim - 1))) / det;
    x[k.offset] = x0;
    x.segment(k.offset + 1, k.dim - 1) = (rs.tail(k.dim - 1) - x0 * l.tail(k.dim - 1)) / l[0];
  }
  return x;
}

VectorXd identity_element(const StandardForm& f) {
  VectorXd e = VectorXd::Zero(f.m);
  e.head(f.lp_dim).setOnes();
  for (const auto& k : f.socs) e[k.offset] = 1.0;
  return e;
}

// Smallest t with v + t e in K (negative when v is interior).
double infeasibility_shift(const VectorXd& v, const StandardForm& f) {
  double a = -kInf;
  if (f.lp_dim > 0) a = std::max(a, -v.head(f.lp_dim).minCoeff());
  for (const auto& k : f.socs) {
    a = std::max(a, v.segment(k.offset + 1, k.dim - 1).norm() - v[k.offset]);
  }
  return f.m > 0 ? a : -1.0;
}

bool strictly_interior(const VectorXd& v, const StandardForm& f) {
  for (int i = 0; i < f.lp_dim; ++i) {
    if (!(v[i] > 0.0)) return false;
  }
  for (const auto& k : f.socs) {
    if (!(v[k.offset] > 0.0) || !(soc_det(v, k) > 0.0)) return false;
  }
  return true;
}

// Largest t in (0, inf] such that u + t d stays in the cone; u interior.
double max_step(const VectorXd& u, const VectorXd& d, const StandardForm& f) {
  double t = kInf;
  for (int i = 0; i < f.lp_dim; ++i) {
    if (d[i] < 0.0) t = std::min(t, -u[i] / d[i]);
  }
  for (const auto& k : f.socs) {
    const auto us = u.segment(k.offset, k.dim);
    const auto ds = d.segment(k.offset, k.dim);
    const double qa = ds[0] * ds[0] - ds.tail(k.dim - 1).squaredNorm();
    const double qb = 2.0 * (us[0] * ds[0] - us.tail(k.dim - 1).dot(ds.tail(k.dim - 1)));
    const double qc = us[0] * us[0] - us.tail(k.dim - 1).squaredNorm();
    double root = kInf;
    const double scale = std::max({std::abs(qa), std::abs(qb), std::abs(qc), 1e-300});
    if (std::abs(qa) <= 1e-14 * scale) {
      if (qb < 0.0) root = -qc / qb;
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
        const double r1 = q / qa;
        const double r2 = q != 0.0 ? qc / q : kInf;
        for (double r : {r1, r2}) {
          if (r > 0.0) root = std::min(root, r);
        }
      }
    }
    if (ds[0] < 0.0) root = std::min(root, -us[0] / ds[0]);
    t = std::min(t, root);
  }
  return t;
}

// Nesterov-Todd scaling point: W z = W^{-1} s = lambda, W symmetric.
struct Scaling {
  VectorXd lp;                     // diagonal of W on the orthant
  std::vector<Eigen::MatrixXd> w;  // per second-order cone
  std::vector<Eigen::MatrixXd> w2;
};

Scaling nt_scaling(const VectorXd& s, const VectorXd& z, const StandardForm& f) {
  Scaling sc;
  sc.lp = (s.head(f.lp_dim).cwiseQuotient(z.head(f.lp_dim))).cwiseSqrt();
  for (const auto& k : f.socs) {
    const int d = k.dim;
    const VectorXd ss = s.segment(k.offset, d);
    const VectorXd zz = z.segment(k.offset, d);
    const double sdet = std::sqrt(std::max(soc_det(s, k), 1e-300));
    const double zdet = std::sqrt(std::max(soc_det(z, k), 1e-300));
    const VectorXd sn = ss / sdet;
    const VectorXd zn = zz / zdet;
    const double gamma = std::sqrt(std::max(0.5 * (1.0 + sn.dot(zn)), 1e-300));
    VectorXd wb(d);
    wb[0] = (sn[0] + zn[0]) / (2.0 * gamma);
    wb.tail(d - 1) = (sn.tail(d - 1) - zn.tail(d - 1)) / (2.0 * gamma);
    const double eta = std::sqrt(sdet / zdet);
    // W = eta * [w0 w1'; w1 I + w1 w1' / (1 + w0)]
    Eigen::MatrixXd W(d, d);
    W(0, 0) = wb[0];
    W.block(0, 1, 1, d - 1) = wb.tail(d - 1).transpose();
    W.block(1, 0, d - 1, 1) = wb.tail(d - 1);
    W.block(1, 1, d - 1, d - 1) =
        Eigen::MatrixXd::Identity(d - 1, d - 1) +
        wb.tail(d - 1) * wb.tail(d - 1).transpose() / (1.0 + wb[0]);
    W *= eta;
    sc.w2.push_back(W * W);
    sc.w.push_back(std::move(W));
  }
  return sc;
}

VectorXd apply_w(const Scaling& sc, const VectorXd& v, const StandardForm& f) {
  VectorXd out(f.m);
  out.head(f.lp_dim) = sc.lp.cwiseProduct(v.head(f.lp_dim));
  for (std::size_t i = 0; i < f.socs.size(); ++i) {
    const auto& k = f.socs[i];
    out.segment(k.offset, k.dim) = sc.w[i] * v.segment(k.offset, k.dim);
  }
  return out;
}

// Up-looking sparse LDL' of a symmetric quasi-definite matrix with
// sign-aware dynamic regularisation of tiny pivots. The fill-reducing
// ordering comes from Eigen's AMD.
class SparseLdl {
 public:
  // `lower` holds the lower triangle; `signs` the expected pivot sign per
  // row (+1 primal block, -1 dual block).
  void analyze(const SpMat& lower, const std::vector<int>& signs) {
    n_ = static_cast<int>(lower.rows());
    const SpMat full = SpMat(lower.selfadjointView<Eigen::Lower>());
    Eigen::AMDOrdering<int> amd;
    amd(full, pinv_);
    perm_ = pinv_.inverse();
    upper_.resize(n_, n_);
    upper_.selfadjointView<Eigen::Upper>() = lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
    upper_.makeCompressed();
    signs_.assign(n_, 1);
    for (int i = 0; i < n_; ++i) signs_[perm_.indices()[i]] = signs[i];

    parent_.assign(n_, -1);
    lnz_.assign(n_, 0);
    std::vector<int> flag(n_, -1);
    for (int k = 0; k < n_; ++k) {
      flag[k] = k;
      for (SpMat::InnerIterator it(upper_, k); it; ++it) {
        int i = static_cast<int>(it.row());
        if (i >= k) continue;
        for (; flag[i] != k; i = parent_[i]) {
          if (parent_[i] == -1) parent_[i] = k;
          ++lnz_[i];
          flag[i] = k;
        }
      }
    }
    lp_.assign(n_ + 1, 0);
    for (int k = 0; k < n_; ++k) lp_[k + 1] = lp_[k] + lnz_[k];
    li_.assign(lp_[n_], 0);
    lx_.assign(lp_[n_], 0.0);
    d_.assign(n_, 0.0);
  }

  void factor(const SpMat& lower, double eps, double delta) {
    upper_.selfadjointView<Eigen::Upper>() = lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
    std::vector<double> y(n_, 0.0);
    std::vector<int> pattern(n_), flag(n_, -1);
    std::fill(lnz_.begin(), lnz_.end(), 0);
    for (int k = 0; k < n_; ++k) {
      int top = n_;
      flag[k] = k;
      for (SpMat::InnerIterator it(upper_, k); it; ++it) {
        int i = static_cast<int>(it.row());
        if (i > k) continue;
        y[i] += it.value();
        int len = 0;
        for (; flag[i] != k; i = parent_[i]) {
          pattern[len++] = i;
          flag[i] = k;
        }
        while (len > 0) pattern[--top] = pattern[--len];
      }
      d_[k] = y[k];
      y[k] = 0.0;
      for (; top < n_; ++top) {
        const int i = pattern[top];
        const double yi = y[i];
        y[i] = 0.0;
        const int p2 = lp_[i] + lnz_[i];
        for (int p = lp_[i]; p < p2; ++p) y[li_[p]] -= lx_[p] * yi;
        const double lki = yi / d_[i];
        d_[k] -= lki * yi;
        li_[p2] = k;
        lx_[p2] = lki;
        ++lnz_[i];
      }
      if (!(d_[k] * signs_[k] > eps)) d_[k] = signs_[k] * delta;
    }
  }

  VectorXd solve(const VectorXd& b) const {
    VectorXd x = perm_ * b;
    for (int j = 0; j < n_; ++j) {
      for (int p = lp_[j]; p < lp_[j] + lnz_[j]; ++p) x[li_[p]] -= lx_[p] * x[j];
    }
    for (int j = 0; j < n_; ++j) x[j] /= d_[j];
    for (int j = n_ - 1; j >= 0; --j) {
      for (int p = lp_[j]; p < lp_[j] + lnz_[j]; ++p) x[j] -= lx_[p] * x[li_[p]];
    }
    return pinv_ * x;
  }

 private:
  int n_ = 0;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_, pinv_;
  SpMat upper_;
  std::vector<int> signs_, parent_, lnz_, lp_, li_;
  std::vector<double> lx_, d_;
};

// Assembles and solves the KKT system
//
//   [ 0   A'   G'   ] [dx]   [r1]
//   [ A   0    0    ] [dy] = [r2]
//   [ G   0   -W'W  ] [dz]   [r3]
//
// The matrix is equilibrated symmetrically (Ruiz), regularised with +d on
// the primal block and -d on the rest, and refined against the original.
class KktSolver {
 public:
  KktSolver(const StandardForm& f, const SolverOptions& opt) : f_(f), opt_(opt) {
    const int N = f.n + f.p + f.m;
    plain_.resize(N, N);
    signs_.assign(N, -1);
    std::fill(signs_.begin(), signs_.begin() + f.n, 1);
  }

  bool factor(const Scaling& sc) {
    const int n = f_.n, p = f_.p, N = n + p + f_.m;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(N + f_.A.nonZeros() + f_.G.nonZeros()) * 2);
    for (int j = 0; j < n + p; ++j) t.emplace_back(j, j, 0.0);
    for (int col = 0; col < f_.A.outerSize(); ++col) {
      for (SpMat::InnerIterator it(f_.A, col); it; ++it) t.emplace_back(n + it.row(), col, it.value());
    }
    for (int col = 0; col < f_.G.outerSize(); ++col) {
      for (SpMat::InnerIterator it(f_.G, col); it; ++it) {
        t.emplace_back(n + p + it.row(), col, it.value());
      }
    }
    const int zo = n + p;
    for (int i = 0; i < f_.lp_dim; ++i) t.emplace_back(zo + i, zo + i, -sc.lp[i] * sc.lp[i]);
    for (std::size_t c = 0; c < f_.socs.size(); ++c) {
      const auto& k = f_.socs[c];
      for (int a = 0; a < k.dim; ++a) {
        for (int b = 0; b <= a; ++b) t.emplace_back(zo + k.offset + a, zo + k.offset + b, -sc.w2[c](a, b));
      }
    }
    plain_.setFromTriplets(t.begin(), t.end());
    if (!plain_.coeffs().allFinite()) return false;

    // Symmetric Ruiz equilibration on the lower triangle.
    equil_ = VectorXd::Ones(N);
    scaled_ = plain_;
    for (int pass = 0; pass < 10; ++pass) {
      VectorXd norm = VectorXd::Zero(N);
      for (int col = 0; col < scaled_.outerSize(); ++col) {
        for (SpMat::InnerIterator it(scaled_, col); it; ++it) {
          const double v = std::abs(it.value());
          norm[it.row()] = std::max(norm[it.row()], v);
          norm[col] = std::max(norm[col], v);
        }
      }
      VectorXd d(N);
      for (int i = 0; i < N; ++i) d[i] = norm[i] > 0.0 ? 1.0 / std::sqrt(norm[i]) : 1.0;
      for (int col = 0; col < scaled_.outerSize(); ++col) {
        for (SpMat::InnerIterator it(scaled_, col); it; ++it) it.valueRef() *= d[it.row()] * d[col];
      }
      equil_ = equil_.cwiseProduct(d);
      if ((norm.array() - 1.0).abs().maxCoeff() < 1e-2) break;
    }
    for (int col = 0; col < scaled_.outerSize(); ++col) {
      for (SpMat::InnerIterator it(scaled_, col); it; ++it) {
        if (it.row() == col) it.valueRef() += signs_[col] * opt_.static_reg;
      }
    }
    if (!analyzed_) {
      ldl_.analyze(scaled_, signs_);
      analyzed_ = true;
    }
    ldl_.factor(scaled_, 1e-13, opt_.static_reg);
    return true;
  }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd d = solve_once(rhs);
    const double bnorm = rhs.lpNorm<Eigen::Infinity>();
    double last = kInf;
    for (int it = 0; it < opt_.refinement_steps; ++it) {
      const VectorXd r = rhs - plain_.selfadjointView<Eigen::Lower>() * d;
      const double rn = r.lpNorm<Eigen::Infinity>();
      if (rn <= 1e-14 * (1.0 + bnorm) || !(rn < 0.5 * last)) break;
      last = rn;
      d += solve_once(r);
    }
    return d;
  }

 private:
  VectorXd solve_once(const VectorXd& rhs) const {
    return equil_.cwiseProduct(ldl_.solve(equil_.cwiseProduct(rhs)));
  }

  const StandardForm& f_;
  const SolverOptions& opt_;
  SpMat plain_, scaled_;
  VectorXd equil_;
  std::vector<int> signs_;
  SparseLdl ldl_;
  bool analyzed_ = false;
};

}  // namespace

ConeSolution solve_cone(const ConeProgram& program, const SolverOptions& opt) {
  program.validate();
  const StandardForm f = to_standard_form(program);
  const int n = f.n, p = f.p, m = f.m;

  KktSolver kkt(f, opt);
  Scaling unit;
  unit.lp = VectorXd::Ones(f.lp_dim);
  for (const auto& k : f.socs) {
    unit.w.push_back(Eigen::MatrixXd::Identity(k.dim, k.dim));
    unit.w2.push_back(Eigen::MatrixXd::Identity(k.dim, k.dim));
  }
  if (!kkt.factor(unit)) throw NumericalFailure("KKT factorisation failed at start", 0);

  VectorXd x(n), y(p), z(m), s(m);
  {
    VectorXd rhs = VectorXd::Zero(n + p + m);
    rhs.segment(n, p) = f.b;
    rhs.segment(n + p, m) = f.h;
    const VectorXd sol = kkt.solve(rhs);
    x = sol.head(n);
    s = -sol.segment(n + p, m);
  }
  {
    VectorXd rhs = VectorXd::Zero(n + p + m);
    rhs.head(n) = -f.c;
    const VectorXd sol = kkt.solve(rhs);
    y = sol.segment(n, p);
    z = sol.segment(n + p, m);
  }
  const VectorXd e = identity_element(f);
  const double ap = infeasibility_shift(s, f);
  if (ap >= -1e-8) s += (1.0 + ap) * e;
  const double ad = infeasibility_shift(z, f);
  if (ad >= -1e-8) z += (1.0 + ad) * e;

  const double bnorm = 1.0 + (p ? f.b.norm() : 0.0);
  const double hnorm = 1.0 + (m ? f.h.norm() : 0.0);
  const double cnorm = 1.0 + f.c.norm();
  const int degree = std::max(f.degree(), 1);

  ConeSolution best;
  bool have_best = false;
  double best_metric = kInf;
  int since_improved = 0;
  auto fallback = [&](const std::string& why, int iter) {
    if (have_best) return best;
    throw NumericalFailure(why, iter);
  };

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    const VectorXd rx = -(f.A.transpose() * y + f.G.transpose() * z + f.c);
    const VectorXd ry = f.b - f.A * x;
    const VectorXd rz = f.h - f.G * x - s;
    const double pres = std::max(p ? ry.norm() / bnorm : 0.0, m ? rz.norm() / hnorm : 0.0);
    const double dres = rx.norm() / cnorm;
    const double gap = s.dot(z);
    const double pobj = f.c.dot(x);
    const double dobj = -f.b.dot(y) - f.h.dot(z);
    const double relgap = std::max(gap, 0.0) / (1.0 + std::min(std::abs(pobj), std::abs(dobj)));

    auto snapshot = [&](SolveStatus status) {
      ConeSolution o;
      o.status = status;
      o.x.assign(x.data(), x.data() + n);
      o.objective = program.evaluate(o.x);
      o.primal_residual = pres;
      o.dual_residual = dres;
      o.gap = relgap;
      o.iterations = iter;
      return o;
    };
    if (pres <= opt.tol && dres <= opt.tol && relgap <= opt.tol) {
      return snapshot(SolveStatus::kOptimal);
    }
    const double metric = std::max({pres, dres, relgap});
    if (metric < 0.9 * best_metric) {
      since_improved = 0;
    } else {
      ++since_improved;
    }
    if (metric <= opt.reduced_tol && metric < best_metric) {
      best = snapshot(SolveStatus::kReducedAccuracy);
      have_best = true;
    }
    best_metric = std::min(best_metric, metric);
    if (have_best && since_improved >= 5) return best;
    if (iter == opt.max_iterations) break;

    const Scaling sc = nt_scaling(s, z, f);
    const VectorXd lambda = apply_w(sc, z, f);
    if (!kkt.factor(sc)) {
      return fallback(fmt::format("KKT factorisation failed at iteration {}", iter), iter);
    }
    const double mu = gap / degree;

    auto newton = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy, VectorXd& dz,
                      VectorXd& ds) {
      const VectorXd q = jordan_divide(lambda, rc, f);
      VectorXd rhs(n + p + m);
      rhs.head(n) = rx;
      rhs.segment(n, p) = ry;
      rhs.segment(n + p, m) = rz - apply_w(sc, q, f);
      const VectorXd sol = kkt.solve(rhs);
      dx = sol.head(n);
      dy = sol.segment(n, p);
      dz = sol.segment(n + p, m);
      ds = apply_w(sc, q - apply_w(sc, dz, f), f);
    };

    VectorXd dx, dy, dz, ds;
    const VectorXd ll = jordan_product(lambda, lambda, f);
    newton(-ll, dx, dy, dz, ds);
    const double a_aff = std::min({1.0, max_step(s, ds, f), max_step(z, dz, f)});
    const double gap_aff = (s + a_aff * ds).dot(z + a_aff * dz);
    const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0), 0.0, 1.0);

    // Mehrotra correction in scaled coordinates: W^{-1} ds_aff = -lambda - W dz_aff.
    const VectorXd wdz = apply_w(sc, dz, f);
    const VectorXd wids = -lambda - wdz;
    const VectorXd rc = sigma * mu * e - ll - jordan_product(wids, wdz, f);
    newton(rc, dx, dy, dz, ds);
    if (!dx.allFinite() || !dy.allFinite() || !dz.allFinite() || !ds.allFinite()) {
      return fallback(fmt::format("non-finite search direction at iteration {}", iter), iter);
    }

    double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds, f), max_step(z, dz, f)));
    int shrink = 0;
    while (!(strictly_interior(s + alpha * ds, f) && strictly_interior(z + alpha * dz, f))) {
      alpha *= 0.5;
      if (++shrink > 60) {
        return fallback(fmt::format("step length collapsed at iteration {}", iter), iter);
      }
    }
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    if (!x.allFinite() || !z.allFinite() || !s.allFinite()) {
      throw NumericalFailure(fmt::format("non-finite iterate at iteration {}", iter), iter);
    }
  }
  return fallback(fmt::format("residuals above tolerance {} after iteration cap {}", opt.tol,
                              opt.max_iterations),
                  opt.max_iterations);
}

}  // namespace branchgrid

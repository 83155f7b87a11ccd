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

// Second-order cone programs and the primal-dual interior-point solver.
//
//   minimize    c'x + offset
//   subject to  sum_j a_ij x_j  = b_i        (equalities)
//               sum_j g_ij x_j <= h_i        (inequalities)
//               lower <= x <= upper
//               (s_1 x_{k1}, ..., s_m x_{km}) in K   (cone groups)
//
// K is either the standard cone  u_0 >= ||(u_1..u_{m-1})||  or the rotated
// cone  2 u_0 u_1 >= ||(u_2..u_{m-1})||^2, u_0, u_1 >= 0.

#ifndef BRANCHGRID_CONE_PROGRAM_HPP_
#define BRANCHGRID_CONE_PROGRAM_HPP_

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace branchgrid {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinearTerm {
  std::size_t var = 0;
  double coef = 0.0;
};

struct LinearConstraint {
  std::vector<LinearTerm> terms;
  double rhs = 0.0;
};

enum class ConeKind { kStandard, kRotated };

struct ConeMember {
  std::size_t var = 0;
  double scale = 1.0;
};

struct ConeConstraint {
  ConeKind kind = ConeKind::kStandard;
  std::vector<ConeMember> members;
};

class ConeProgram {
 public:
  std::size_t add_var(double lower, double upper, double cost = 0.0,
                      std::string name = {});
  void add_equality(std::vector<LinearTerm> terms, double rhs);
  void add_inequality(std::vector<LinearTerm> terms, double rhs);
  void add_cone(ConeKind kind, std::vector<ConeMember> members);
  void add_objective(std::size_t var, double coef) { objective_[var] += coef; }
  void add_offset(double value) { offset_ += value; }

  std::size_t num_vars() const { return objective_.size(); }
  const std::vector<double>& objective() const { return objective_; }
  double offset() const { return offset_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<LinearConstraint>& equalities() const { return equalities_; }
  const std::vector<LinearConstraint>& inequalities() const { return inequalities_; }
  const std::vector<ConeConstraint>& cones() const { return cones_; }

  double evaluate(const std::vector<double>& x) const;

  // Throws ValidationError for out-of-range indices, cone groups with fewer
  // than two members, inverted bounds or non-finite coefficients.
  void validate() const;

  // Plain-text dump: one `obj`, `eq`, `ineq`, `bound` and `cone` record per
  // line (see README for the grammar).
  std::string dump() const;

 private:
  std::vector<double> objective_;
  double offset_ = 0.0;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::string> names_;
  std::vector<LinearConstraint> equalities_;
  std::vector<LinearConstraint> inequalities_;
  std::vector<ConeConstraint> cones_;
};

struct SolverOptions {
  double tol = 1e-8;  // primal, dual and relative complementarity
  int max_iterations = 100;
  double static_reg = 1e-9;
  int refinement_steps = 3;
  // Fallback accepted when the iteration stalls or breaks down short of tol.
  double reduced_tol = 1e-6;
};

enum class SolveStatus { kOptimal, kReducedAccuracy };

struct ConeSolution {
  SolveStatus status = SolveStatus::kOptimal;
  std::vector<double> x;
  double objective = 0.0;  // c'x + offset
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;  // relative complementarity
  int iterations = 0;
};

// Mehrotra predictor-corrector with Nesterov-Todd scaling. Deterministic.
// When progress stalls short of options.tol, the best iterate within
// options.reduced_tol is returned as kReducedAccuracy; without one it throws
// NumericalFailure.
ConeSolution solve_cone(const ConeProgram& program,
                        const SolverOptions& options = {});

}  // namespace branchgrid

#endif  // BRANCHGRID_CONE_PROGRAM_HPP_

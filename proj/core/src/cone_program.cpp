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

#include <cmath>

#include <fmt/format.h>

#include "branchgrid/cone_program.hpp"
#include "branchgrid/errors.hpp"

namespace branchgrid {

std::size_t ConeProgram::add_var(double lower, double upper, double cost,
                                 std::string name) {
  objective_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  names_.push_back(std::move(name));
  return objective_.size() - 1;
}

void ConeProgram::add_equality(std::vector<LinearTerm> terms, double rhs) {
  equalities_.push_back({std::move(terms), rhs});
}

void ConeProgram::add_inequality(std::vector<LinearTerm> terms, double rhs) {
  inequalities_.push_back({std::move(terms), rhs});
}

void ConeProgram::add_cone(ConeKind kind, std::vector<ConeMember> members) {
  cones_.push_back({kind, std::move(members)});
}

double ConeProgram::evaluate(const std::vector<double>& x) const {
  double v = offset_;
  for (std::size_t j = 0; j < objective_.size(); ++j) v += objective_[j] * x[j];
  return v;
}

void ConeProgram::validate() const {
  const std::size_t n = num_vars();
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective_[j])) {
      throw ValidationError(fmt::format("variable {} has a non-finite cost", j));
    }
    if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] > upper_[j]) {
      throw ValidationError(fmt::format("variable {} has inverted bounds", j));
    }
  }
  auto check_rows = [&](const std::vector<LinearConstraint>& rows, const char* what) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!std::isfinite(rows[i].rhs)) {
        throw ValidationError(fmt::format("{} row {} has a non-finite rhs", what, i));
      }
      for (const auto& t : rows[i].terms) {
        if (t.var >= n || !std::isfinite(t.coef)) {
          throw ValidationError(fmt::format("{} row {} has a bad term", what, i));
        }
      }
    }
  };
  check_rows(equalities_, "equality");
  check_rows(inequalities_, "inequality");
  for (std::size_t k = 0; k < cones_.size(); ++k) {
    const auto& cone = cones_[k];
    const std::size_t min_members = cone.kind == ConeKind::kRotated ? 3 : 2;
    if (cone.members.size() < min_members) {
      throw ValidationError(fmt::format("cone {} has too few members", k));
    }
    for (std::size_t i = 0; i < cone.members.size(); ++i) {
      const auto& m = cone.members[i];
      if (m.var >= n || !std::isfinite(m.scale) || m.scale == 0.0) {
        throw ValidationError(fmt::format("cone {} has a bad member", k));
      }
      const bool head = i == 0 || (cone.kind == ConeKind::kRotated && i == 1);
      if (head && m.scale < 0.0) {
        throw ValidationError(fmt::format("cone {} has a negative head scale", k));
      }
    }
  }
}

std::string ConeProgram::dump() const {
  std::string out = fmt::format("vars {}\noffset {}\n", num_vars(), offset_);
  for (std::size_t j = 0; j < num_vars(); ++j) {
    out += fmt::format("var {} {} {} {} {}\n", j, objective_[j], lower_[j], upper_[j],
                       names_[j].empty() ? "-" : names_[j]);
  }
  for (std::size_t i = 0; i < equalities_.size(); ++i) {
    for (const auto& t : equalities_[i].terms) {
      out += fmt::format("eq {} {} {}\n", i, t.var, t.coef);
    }
    out += fmt::format("eq_rhs {} {}\n", i, equalities_[i].rhs);
  }
  for (std::size_t i = 0; i < inequalities_.size(); ++i) {
    for (const auto& t : inequalities_[i].terms) {
      out += fmt::format("ineq {} {} {}\n", i, t.var, t.coef);
    }
    out += fmt::format("ineq_rhs {} {}\n", i, inequalities_[i].rhs);
  }
  for (std::size_t k = 0; k < cones_.size(); ++k) {
    out += fmt::format("cone {} {}", k,
                       cones_[k].kind == ConeKind::kRotated ? "rotated" : "standard");
    for (const auto& m : cones_[k].members) out += fmt::format(" {}:{}", m.var, m.scale);
    out += "\n";
  }
  return out;
}

}  // namespace branchgrid

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

// Branch-flow (DistFlow) optimal power flow on a radial feeder, relaxed to
// a second-order cone program. Per branch k = (i -> j):
//
//   v_j = v_i - 2 (r P_k + x Q_k) + (r^2 + x^2) l_k
//   P_k^2 + Q_k^2 <= l_k v_i
//   P_k - r l_k + p_j = sum of child flows   (same for Q with x)
//
// The single-period program dispatches DGs, curtailment and the utility
// exchange around fixed BESS injections; the multi-period program also
// schedules the BESSs with perfect information over a whole day.

#ifndef BRANCHGRID_OPF_HPP_
#define BRANCHGRID_OPF_HPP_

#include <cstddef>
#include <vector>

#include "branchgrid/cone_program.hpp"
#include "branchgrid/grid_model.hpp"

namespace branchgrid {

struct OpfInstance {
  std::size_t period = 0;
  // Fixed net BESS injection (discharge - charge), kW.
  std::vector<double> bess_injection_kw;
  // When true the BESS powers become decision variables bounded by the
  // limits below instead of `bess_injection_kw` (single-period myopic).
  bool bess_free = false;
  std::vector<double> bess_charge_limit_kw;
  std::vector<double> bess_discharge_limit_kw;
  std::vector<double> renewable_avail_kw;  // per renewable unit
  std::vector<double> load_p_kw;           // per bus index
  std::vector<double> load_q_kvar;         // per bus index
  std::vector<double> prev_dg_kw;          // empty: no ramp limit
  double price_buy = 0.0;
  double price_sell = 0.0;
};

// Gathers one step of `day` into an instance. `prev_dg_kw` may be empty.
OpfInstance make_instance(const ExogenousDay& day, std::size_t step,
                          const NetworkTopology& topo, const DeviceSet& devices,
                          std::vector<double> bess_injection_kw,
                          std::vector<double> prev_dg_kw = {});

// Variable indices of one period inside a ConeProgram.
struct PeriodLayout {
  std::vector<std::size_t> v, p_flow, q_flow, l;
  std::vector<std::size_t> dg_p, dg_q, dg_tau;
  std::vector<std::size_t> curtail;
  std::size_t p_buy = 0, p_sell = 0, q_grid = 0;
  std::vector<std::size_t> slack_p, slack_q;
  std::vector<std::size_t> bess_ch, bess_dis;  // empty when BESS fixed
};

struct OpfProgram {
  ConeProgram program;
  PeriodLayout layout;
};

OpfProgram build_opf(const OpfInstance& instance, const NetworkTopology& topo,
                     const DeviceSet& devices, const ScenarioConfig& cfg);

struct CostBreakdown {
  double fuel = 0.0;
  double exchange = 0.0;
  double degradation = 0.0;
  double curtailment = 0.0;
  double penalty = 0.0;
  double total() const { return fuel + exchange + degradation + curtailment + penalty; }
};

struct OpfSolution {
  std::vector<double> dg_p_kw, dg_q_kvar;
  std::vector<double> curtail_kw;
  double p_buy_kw = 0.0, p_sell_kw = 0.0, q_grid_kvar = 0.0;
  std::vector<double> v;  // p.u.^2 per bus
  std::vector<double> l;  // p.u.^2 per branch
  std::vector<double> p_flow_kw, q_flow_kvar;
  std::vector<double> slack_p_kw, slack_q_kvar;
  std::vector<double> bess_charge_kw, bess_discharge_kw;
  double loss_kw = 0.0;
  CostBreakdown cost;
  // Largest nodal active/reactive balance residual (p.u.).
  double balance_residual = 0.0;
  double primal_residual = 0.0, dual_residual = 0.0, gap = 0.0;
  int iterations = 0;
  bool reduced_accuracy = false;

  double total_slack_kw() const;
};

OpfSolution extract_solution(const ConeProgram& program, const PeriodLayout& layout,
                             const std::vector<double>& x, const OpfInstance& instance,
                             const NetworkTopology& topo, const DeviceSet& devices,
                             const ScenarioConfig& cfg);

// build_opf + solve_cone + extract_solution. Throws NumericalFailure.
OpfSolution solve_opf(const OpfInstance& instance, const NetworkTopology& topo,
                      const DeviceSet& devices, const ScenarioConfig& cfg,
                      const SolverOptions& options = {});

struct ExactnessReport {
  double max_gap = 0.0;  // max_k (l v_i - P^2 - Q^2) / max(1, l v_i)
  std::size_t worst_branch = 0;
  bool flagged = false;  // max_gap > threshold
};

ExactnessReport check_exactness(const OpfSolution& solution, const NetworkTopology& topo,
                                double threshold = 1e-5);

struct MultiPeriodProgram {
  ConeProgram program;
  std::vector<PeriodLayout> periods;
  // soc[d][t] for t = 0..T (t = 0 is the fixed initial value).
  std::vector<std::vector<std::size_t>> soc;
};

MultiPeriodProgram build_multiperiod_relaxation(const ExogenousDay& day,
                                                const NetworkTopology& topo,
                                                const DeviceSet& devices,
                                                const ScenarioConfig& cfg);

struct MultiPeriodSolution {
  double total_cost = 0.0;
  std::vector<OpfSolution> periods;
  std::vector<std::vector<double>> soc;  // [device][t], t = 0..T
  double primal_residual = 0.0, dual_residual = 0.0, gap = 0.0;
  int iterations = 0;
  bool reduced_accuracy = false;
};

MultiPeriodSolution solve_multiperiod(const ExogenousDay& day, const NetworkTopology& topo,
                                      const DeviceSet& devices, const ScenarioConfig& cfg,
                                      const SolverOptions& options = {});

}  // namespace branchgrid

#endif  // BRANCHGRID_OPF_HPP_

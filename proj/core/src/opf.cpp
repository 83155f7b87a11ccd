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

#include "branchgrid/opf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "branchgrid/errors.hpp"

namespace branchgrid {
namespace {

// Adds the network, DG, curtailment, exchange and slack blocks of one
// period. BESS terms are added either as constants (fixed injections) or
// as [0, limit] charge/discharge variables when `free_bess` is set.
PeriodLayout add_period(ConeProgram& prog, std::size_t half, const OpfInstance& in,
                        bool free_bess, const std::vector<double>& ch_limit_kw,
                        const std::vector<double>& dis_limit_kw, const NetworkTopology& topo,
                        const DeviceSet& dev, const ScenarioConfig& cfg) {
  const double S = topo.base_kva;
  const double dt = cfg.dt_hours;
  const std::size_t nb = topo.buses.size();
  const std::size_t nk = topo.branches.size();
  const std::string tag = fmt::format("t{}.", in.period);
  PeriodLayout L;

  for (std::size_t i = 0; i < nb; ++i) {
    L.v.push_back(prog.add_var(topo.buses[i].v_min, topo.buses[i].v_max, 0.0,
                               tag + fmt::format("v{}", topo.buses[i].id)));
  }
  for (std::size_t k = 0; k < nk; ++k) {
    L.p_flow.push_back(prog.add_var(-kInf, kInf, 0.0, tag + fmt::format("P{}", k)));
    L.q_flow.push_back(prog.add_var(-kInf, kInf, 0.0, tag + fmt::format("Q{}", k)));
    L.l.push_back(prog.add_var(0.0, topo.branches[k].l_max, 0.0, tag + fmt::format("l{}", k)));
  }
  for (std::size_t g = 0; g < dev.dgs.size(); ++g) {
    const auto& dg = dev.dgs[g];
    double lo = dg.p_min, hi = dg.p_max;
    if (!in.prev_dg_kw.empty()) {
      lo = std::max(lo, in.prev_dg_kw[g] - dg.ramp);
      hi = std::min(hi, in.prev_dg_kw[g] + dg.ramp);
      if (lo > hi) lo = hi = std::clamp(in.prev_dg_kw[g], dg.p_min, dg.p_max);
    }
    L.dg_p.push_back(prog.add_var(lo / S, hi / S, dt * dg.b * S, tag + fmt::format("pg{}", g)));
    L.dg_q.push_back(
        prog.add_var(dg.q_min / S, dg.q_max / S, 0.0, tag + fmt::format("qg{}", g)));
    prog.add_offset(dt * dg.c);
    if (dg.a > 0.0) {
      const auto tau = prog.add_var(0.0, kInf, dt * dg.a * S * S, tag + fmt::format("tau{}", g));
      prog.add_cone(ConeKind::kRotated, {{tau, 1.0}, {half, 1.0}, {L.dg_p.back(), 1.0}});
      L.dg_tau.push_back(tau);
    } else {
      L.dg_tau.push_back(static_cast<std::size_t>(-1));
    }
  }
  for (std::size_t u = 0; u < dev.renewables.size(); ++u) {
    L.curtail.push_back(prog.add_var(0.0, std::max(0.0, in.renewable_avail_kw[u]) / S,
                                     dt * cfg.curtail_price * S, tag + fmt::format("curt{}", u)));
  }
  const double gmax = dev.p_grid_max / S;
  L.p_buy = prog.add_var(0.0, gmax, dt * in.price_buy * S, tag + "p_buy");
  L.p_sell = prog.add_var(0.0, gmax, -dt * in.price_sell * S, tag + "p_sell");
  L.q_grid = prog.add_var(-gmax, gmax, 0.0, tag + "q_grid");
  for (std::size_t i = 0; i < nb; ++i) {
    L.slack_p.push_back(prog.add_var(0.0, kInf, dt * cfg.penalty_price * S, tag + fmt::format("sp{}", i)));
    L.slack_q.push_back(prog.add_var(0.0, kInf, dt * cfg.penalty_price * S, tag + fmt::format("sq{}", i)));
  }
  if (free_bess) {
    for (std::size_t d = 0; d < dev.bess.size(); ++d) {
      const double kb = dt * dev.bess[d].k_b * S;
      L.bess_ch.push_back(prog.add_var(0.0, std::max(0.0, ch_limit_kw[d]) / S, kb,
                                       tag + fmt::format("ch{}", d)));
      L.bess_dis.push_back(prog.add_var(0.0, std::max(0.0, dis_limit_kw[d]) / S, kb,
                                        tag + fmt::format("dis{}", d)));
    }
  } else {
    for (std::size_t d = 0; d < dev.bess.size(); ++d) {
      prog.add_offset(dt * dev.bess[d].k_b * std::abs(in.bess_injection_kw[d]));
    }
  }

  // Nodal balances.
  std::vector<std::vector<LinearTerm>> pbal(nb), qbal(nb);
  std::vector<double> prhs(nb), qrhs(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    prhs[i] = in.load_p_kw[i] / S;
    qrhs[i] = in.load_q_kvar[i] / S;
    pbal[i].push_back({L.slack_p[i], 1.0});
    qbal[i].push_back({L.slack_q[i], 1.0});
  }
  for (std::size_t k = 0; k < nk; ++k) {
    const auto head = static_cast<std::size_t>(topo.branch_head[k]);
    const auto tail = static_cast<std::size_t>(topo.branch_tail[k]);
    const auto& br = topo.branches[k];
    pbal[tail].push_back({L.p_flow[k], 1.0});
    pbal[tail].push_back({L.l[k], -br.r});
    qbal[tail].push_back({L.q_flow[k], 1.0});
    qbal[tail].push_back({L.l[k], -br.x});
    pbal[head].push_back({L.p_flow[k], -1.0});
    qbal[head].push_back({L.q_flow[k], -1.0});

    prog.add_equality({{L.v[tail], 1.0},
                       {L.v[head], -1.0},
                       {L.p_flow[k], 2.0 * br.r},
                       {L.q_flow[k], 2.0 * br.x},
                       {L.l[k], -(br.r * br.r + br.x * br.x)}},
                      0.0);
    prog.add_cone(ConeKind::kRotated,
                  {{L.l[k], 1.0}, {L.v[head], 0.5}, {L.p_flow[k], 1.0}, {L.q_flow[k], 1.0}});
  }
  for (std::size_t g = 0; g < dev.dgs.size(); ++g) {
    const auto b = topo.bus_index(dev.dgs[g].bus);
    pbal[b].push_back({L.dg_p[g], 1.0});
    qbal[b].push_back({L.dg_q[g], 1.0});
  }
  for (std::size_t u = 0; u < dev.renewables.size(); ++u) {
    const auto b = topo.bus_index(dev.renewables[u].bus);
    pbal[b].push_back({L.curtail[u], -1.0});
    prhs[b] -= std::max(0.0, in.renewable_avail_kw[u]) / S;
  }
  for (std::size_t d = 0; d < dev.bess.size(); ++d) {
    const auto b = topo.bus_index(dev.bess[d].bus);
    if (free_bess) {
      pbal[b].push_back({L.bess_dis[d], 1.0});
      pbal[b].push_back({L.bess_ch[d], -1.0});
    } else {
      prhs[b] -= in.bess_injection_kw[d] / S;
    }
  }
  const auto root = topo.root_index();
  pbal[root].push_back({L.p_buy, 1.0});
  pbal[root].push_back({L.p_sell, -1.0});
  qbal[root].push_back({L.q_grid, 1.0});
  for (std::size_t i = 0; i < nb; ++i) {
    prog.add_equality(std::move(pbal[i]), prhs[i]);
    prog.add_equality(std::move(qbal[i]), qrhs[i]);
  }
  return L;
}

void check_instance(const OpfInstance& in, const NetworkTopology& topo, const DeviceSet& dev) {
  const std::size_t nb = topo.buses.size();
  if (in.load_p_kw.size() != nb || in.load_q_kvar.size() != nb) {
    throw ValidationError("opf instance: load vectors must have one entry per bus");
  }
  if (in.renewable_avail_kw.size() != dev.renewables.size()) {
    throw ValidationError("opf instance: one availability per renewable unit required");
  }
  if (!in.prev_dg_kw.empty() && in.prev_dg_kw.size() != dev.dgs.size()) {
    throw ValidationError("opf instance: prev_dg_kw size mismatch");
  }
  if (in.bess_free) {
    if (in.bess_charge_limit_kw.size() != dev.bess.size() ||
        in.bess_discharge_limit_kw.size() != dev.bess.size()) {
      throw ValidationError("opf instance: BESS limit vectors size mismatch");
    }
  } else {
    if (in.bess_injection_kw.size() != dev.bess.size()) {
      throw ValidationError("opf instance: one BESS injection per device required");
    }
    for (std::size_t d = 0; d < dev.bess.size(); ++d) {
      if (std::abs(in.bess_injection_kw[d]) > dev.bess[d].p_max * (1.0 + 1e-12)) {
        throw ValidationError(fmt::format("opf instance: BESS {} injection exceeds p_max", d));
      }
    }
  }
  for (std::size_t i = 0; i < nb; ++i) {
    if (!(in.load_p_kw[i] >= 0.0)) throw ValidationError("opf instance: negative load");
  }
  for (double a : in.renewable_avail_kw) {
    if (!(a >= 0.0)) throw ValidationError("opf instance: negative availability");
  }
}

double clamp_nonneg(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

double OpfSolution::total_slack_kw() const {
  double s = 0.0;
  for (double v : slack_p_kw) s += v;
  for (double v : slack_q_kvar) s += v;
  return s;
}

OpfInstance make_instance(const ExogenousDay& day, std::size_t step,
                          const NetworkTopology& topo, const DeviceSet& dev,
                          std::vector<double> bess_injection_kw,
                          std::vector<double> prev_dg_kw) {
  OpfInstance in;
  in.period = step;
  in.bess_injection_kw = std::move(bess_injection_kw);
  in.prev_dg_kw = std::move(prev_dg_kw);
  for (std::size_t u = 0; u < dev.renewables.size(); ++u) {
    in.renewable_avail_kw.push_back(day.renewable(u, dev.renewables[u].kind, step));
  }
  in.load_p_kw.assign(topo.buses.size(), 0.0);
  in.load_q_kvar.assign(topo.buses.size(), 0.0);
  for (std::size_t i = 0; i < dev.loads.size(); ++i) {
    auto it = day.load.find(static_cast<int>(i));
    if (it == day.load.end()) {
      throw ValidationError(fmt::format("day {} has no load series for device {}", day.day_id, i));
    }
    const double p = it->second.at(step);
    const auto b = topo.bus_index(dev.loads[i].bus);
    in.load_p_kw[b] += p;
    in.load_q_kvar[b] += p * std::tan(dev.loads[i].pf_angle);
  }
  in.price_buy = day.price_buy.at(step);
  in.price_sell = day.price_sell.at(step);
  return in;
}

OpfProgram build_opf(const OpfInstance& in, const NetworkTopology& topo, const DeviceSet& dev,
                     const ScenarioConfig& cfg) {
  check_instance(in, topo, dev);
  OpfProgram out;
  const auto half = out.program.add_var(0.5, 0.5, 0.0, "half");
  out.layout = add_period(out.program, half, in, in.bess_free, in.bess_charge_limit_kw,
                          in.bess_discharge_limit_kw, topo, dev, cfg);
  return out;
}

OpfSolution extract_solution(const ConeProgram& /*program*/, const PeriodLayout& L,
                             const std::vector<double>& x, const OpfInstance& in,
                             const NetworkTopology& topo, const DeviceSet& dev,
                             const ScenarioConfig& cfg) {
  const double S = topo.base_kva;
  const double dt = cfg.dt_hours;
  OpfSolution sol;
  for (auto i : L.v) sol.v.push_back(x[i]);
  for (std::size_t k = 0; k < L.l.size(); ++k) {
    sol.l.push_back(clamp_nonneg(x[L.l[k]]));
    sol.p_flow_kw.push_back(x[L.p_flow[k]] * S);
    sol.q_flow_kvar.push_back(x[L.q_flow[k]] * S);
    sol.loss_kw += topo.branches[k].r * sol.l.back() * S;
  }
  for (std::size_t g = 0; g < L.dg_p.size(); ++g) {
    sol.dg_p_kw.push_back(x[L.dg_p[g]] * S);
    sol.dg_q_kvar.push_back(x[L.dg_q[g]] * S);
  }
  for (std::size_t u = 0; u < L.curtail.size(); ++u) {
    sol.curtail_kw.push_back(
        std::min(clamp_nonneg(x[L.curtail[u]] * S), std::max(0.0, in.renewable_avail_kw[u])));
  }
  // Report the exchange as a single direction; the net injection (and so
  // every balance equation) is unchanged.
  const double net = (x[L.p_buy] - x[L.p_sell]) * S;
  sol.p_buy_kw = std::max(net, 0.0);
  sol.p_sell_kw = std::max(-net, 0.0);
  sol.q_grid_kvar = x[L.q_grid] * S;
  for (std::size_t i = 0; i < L.slack_p.size(); ++i) {
    sol.slack_p_kw.push_back(clamp_nonneg(x[L.slack_p[i]] * S));
    sol.slack_q_kvar.push_back(clamp_nonneg(x[L.slack_q[i]] * S));
  }
  for (std::size_t d = 0; d < dev.bess.size(); ++d) {
    if (!L.bess_ch.empty()) {
      sol.bess_charge_kw.push_back(clamp_nonneg(x[L.bess_ch[d]] * S));
      sol.bess_discharge_kw.push_back(clamp_nonneg(x[L.bess_dis[d]] * S));
    } else {
      sol.bess_charge_kw.push_back(std::max(-in.bess_injection_kw[d], 0.0));
      sol.bess_discharge_kw.push_back(std::max(in.bess_injection_kw[d], 0.0));
    }
  }

  CostBreakdown& c = sol.cost;
  for (std::size_t g = 0; g < dev.dgs.size(); ++g) {
    const auto& dg = dev.dgs[g];
    const double p = sol.dg_p_kw[g];
    c.fuel += dt * (dg.a * p * p + dg.b * p + dg.c);
  }
  c.exchange = dt * (in.price_buy * sol.p_buy_kw - in.price_sell * sol.p_sell_kw);
  for (std::size_t d = 0; d < dev.bess.size(); ++d) {
    c.degradation += dt * dev.bess[d].k_b * (sol.bess_charge_kw[d] + sol.bess_discharge_kw[d]);
  }
  for (double v : sol.curtail_kw) c.curtailment += dt * cfg.curtail_price * v;
  c.penalty = dt * cfg.penalty_price * sol.total_slack_kw();

  // Balance residuals in p.u. from the reported values.
  const std::size_t nb = topo.buses.size();
  std::vector<double> rp(nb), rq(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    rp[i] = (sol.slack_p_kw[i] - in.load_p_kw[i]) / S;
    rq[i] = (sol.slack_q_kvar[i] - in.load_q_kvar[i]) / S;
  }
  for (std::size_t k = 0; k < L.l.size(); ++k) {
    const auto head = static_cast<std::size_t>(topo.branch_head[k]);
    const auto tail = static_cast<std::size_t>(topo.branch_tail[k]);
    const auto& br = topo.branches[k];
    rp[tail] += sol.p_flow_kw[k] / S - br.r * sol.l[k];
    rq[tail] += sol.q_flow_kvar[k] / S - br.x * sol.l[k];
    rp[head] -= sol.p_flow_kw[k] / S;
    rq[head] -= sol.q_flow_kvar[k] / S;
  }
  for (std::size_t g = 0; g < dev.dgs.size(); ++g) {
    const auto b = topo.bus_index(dev.dgs[g].bus);
    rp[b] += sol.dg_p_kw[g] / S;
    rq[b] += sol.dg_q_kvar[g] / S;
  }
  for (std::size_t u = 0; u < dev.renewables.size(); ++u) {
    const auto b = topo.bus_index(dev.renewables[u].bus);
    rp[b] += (std::max(0.0, in.renewable_avail_kw[u]) - sol.curtail_kw[u]) / S;
  }
  for (std::size_t d = 0; d < dev.bess.size(); ++d) {
    const auto b = topo.bus_index(dev.bess[d].bus);
    rp[b] += (sol.bess_discharge_kw[d] - sol.bess_charge_kw[d]) / S;
  }
  const auto root = topo.root_index();
  rp[root] += (sol.p_buy_kw - sol.p_sell_kw) / S;
  rq[root] += sol.q_grid_kvar / S;
  for (std::size_t i = 0; i < nb; ++i) {
    sol.balance_residual = std::max({sol.balance_residual, std::abs(rp[i]), std::abs(rq[i])});
  }
  return sol;
}

OpfSolution solve_opf(const OpfInstance& in, const NetworkTopology& topo, const DeviceSet& dev,
                      const ScenarioConfig& cfg, const SolverOptions& options) {
  const OpfProgram op = build_opf(in, topo, dev, cfg);
  const ConeSolution cs = solve_cone(op.program, options);
  OpfSolution sol = extract_solution(op.program, op.layout, cs.x, in, topo, dev, cfg);
  sol.primal_residual = cs.primal_residual;
  sol.dual_residual = cs.dual_residual;
  sol.gap = cs.gap;
  sol.iterations = cs.iterations;
  sol.reduced_accuracy = cs.status == SolveStatus::kReducedAccuracy;
  return sol;
}

ExactnessReport check_exactness(const OpfSolution& sol, const NetworkTopology& topo,
                                double threshold) {
  ExactnessReport rep;
  const double S = topo.base_kva;
  for (std::size_t k = 0; k < sol.l.size(); ++k) {
    const double vi = sol.v[static_cast<std::size_t>(topo.branch_head[k])];
    const double P = sol.p_flow_kw[k] / S;
    const double Q = sol.q_flow_kvar[k] / S;
    const double lv = sol.l[k] * vi;
    const double g = (lv - (P * P + Q * Q)) / std::max(1.0, lv);
    if (g > rep.max_gap) {
      rep.max_gap = g;
      rep.worst_branch = k;
    }
  }
  rep.flagged = rep.max_gap > threshold;
  return rep;
}

MultiPeriodProgram build_multiperiod_relaxation(const ExogenousDay& day,
                                                const NetworkTopology& topo,
                                                const DeviceSet& dev,
                                                const ScenarioConfig& cfg) {
  check_day_compatible(day, dev, cfg);
  const std::size_t T = cfg.steps_per_day();
  const double S = topo.base_kva;
  const double dt = cfg.dt_hours;
  MultiPeriodProgram out;
  ConeProgram& prog = out.program;
  const auto half = prog.add_var(0.5, 0.5, 0.0, "half");

  std::vector<double> pmax;
  for (const auto& b : dev.bess) pmax.push_back(b.p_max);
  out.soc.assign(dev.bess.size(), {});
  for (std::size_t d = 0; d < dev.bess.size(); ++d) {
    const auto& b = dev.bess[d];
    out.soc[d].push_back(prog.add_var(b.soc_init, b.soc_init, 0.0, fmt::format("soc{}.0", d)));
  }
  for (std::size_t t = 0; t < T; ++t) {
    OpfInstance in = make_instance(day, t, topo, dev, std::vector<double>(dev.bess.size(), 0.0));
    out.periods.push_back(add_period(prog, half, in, true, pmax, pmax, topo, dev, cfg));
    const auto& L = out.periods.back();
    for (std::size_t d = 0; d < dev.bess.size(); ++d) {
      const auto& b = dev.bess[d];
      const auto next = prog.add_var(b.soc_min, b.soc_max, 0.0, fmt::format("soc{}.{}", d, t + 1));
      // E (soc' - soc) = dt (eta_ch ch - dis / eta_dis), powers in kW.
      prog.add_equality({{next, b.e_cap},
                         {out.soc[d].back(), -b.e_cap},
                         {L.bess_ch[d], -dt * b.eta_ch * S},
                         {L.bess_dis[d], dt * S / b.eta_dis}},
                        0.0);
      out.soc[d].push_back(next);
    }
    if (t > 0) {
      const auto& prev = out.periods[t - 1];
      for (std::size_t g = 0; g < dev.dgs.size(); ++g) {
        const double r = dev.dgs[g].ramp / S;
        prog.add_inequality({{L.dg_p[g], 1.0}, {prev.dg_p[g], -1.0}}, r);
        prog.add_inequality({{L.dg_p[g], -1.0}, {prev.dg_p[g], 1.0}}, r);
      }
    }
  }
  return out;
}

MultiPeriodSolution solve_multiperiod(const ExogenousDay& day, const NetworkTopology& topo,
                                      const DeviceSet& dev, const ScenarioConfig& cfg,
                                      const SolverOptions& options) {
  const MultiPeriodProgram mp = build_multiperiod_relaxation(day, topo, dev, cfg);
  const ConeSolution cs = solve_cone(mp.program, options);
  MultiPeriodSolution out;
  out.primal_residual = cs.primal_residual;
  out.dual_residual = cs.dual_residual;
  out.gap = cs.gap;
  out.iterations = cs.iterations;
  out.reduced_accuracy = cs.status == SolveStatus::kReducedAccuracy;
  for (std::size_t t = 0; t < mp.periods.size(); ++t) {
    OpfInstance in = make_instance(day, t, topo, dev, std::vector<double>(dev.bess.size(), 0.0));
    in.bess_free = true;
    out.periods.push_back(
        extract_solution(mp.program, mp.periods[t], cs.x, in, topo, dev, cfg));
    out.total_cost += out.periods.back().cost.total();
  }
  for (const auto& track : mp.soc) {
    std::vector<double> soc;
    for (auto i : track) soc.push_back(cs.x[i]);
    out.soc.push_back(std::move(soc));
  }
  return out;
}

}  // namespace branchgrid

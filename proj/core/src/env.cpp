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


#include "branchgrid/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "branchgrid/errors.hpp"

namespace branchgrid {

ActionSpace::ActionSpace(const DeviceSet& devices, std::size_t levels) : levels_(levels) {
  if (levels < 2) throw ValidationError("action space needs at least 2 levels");
  for (const auto& b : devices.bess) p_max_.push_back(b.p_max);
}

double ActionSpace::level_kw(std::size_t device, std::size_t level) const {
  if (device >= p_max_.size() || level >= levels_) {
    throw ValidationError(fmt::format("action level {} of branch {} out of range", level, device));
  }
  const double n1 = static_cast<double>(levels_ - 1);
  return p_max_[device] * (2.0 * static_cast<double>(level) - n1) / n1;
}

std::vector<double> ActionSpace::to_kw(const std::vector<std::size_t>& levels) const {
  if (levels.size() != p_max_.size()) {
    throw ValidationError(fmt::format("expected {} action indices, got {}", p_max_.size(),
                                      levels.size()));
  }
  std::vector<double> kw(levels.size());
  for (std::size_t d = 0; d < levels.size(); ++d) kw[d] = level_kw(d, levels[d]);
  return kw;
}

std::size_t ActionSpace::idle_level() const { return levels_ / 2; }

MicrogridEnv::MicrogridEnv(NetworkFile network, ScenarioConfig scenario, EnvConfig config)
    : net_(std::move(network)), scenario_(scenario), config_(config) {
  scenario_.validate();
  validate_devices(net_.devices, net_.topology);
  actions_ = ActionSpace(net_.devices, config_.levels);
  const double w = config_.history_hours / scenario_.dt_hours;
  if (!(config_.history_hours > 0.0) || std::abs(w - std::round(w)) > 1e-9) {
    throw ValidationError("history_hours must be a positive multiple of dt_hours");
  }
  window_ = static_cast<std::size_t>(std::round(w));
  if (!(config_.price_scale > 0.0)) throw ValidationError("price_scale must be positive");

  double solar = 0.0, wind = 0.0, load = 0.0;
  for (const auto& r : net_.devices.renewables) {
    (r.kind == RenewableKind::kSolar ? solar : wind) += r.rated;
  }
  for (const auto& l : net_.devices.loads) load += l.nominal_kw;
  auto pick = [](double cfg, double derived) {
    if (cfg > 0.0) return cfg;
    return derived > 0.0 ? derived : 1.0;
  };
  solar_scale_ = pick(config_.solar_scale_kw, solar);
  wind_scale_ = pick(config_.wind_scale_kw, wind);
  load_scale_ = pick(config_.load_scale_kw, load);
}

EnvState MicrogridEnv::reset(const ExogenousDay& day) const {
  check_day_compatible(day, net_.devices, scenario_);
  EnvState s;
  s.day = &day;
  s.t = 0;
  for (const auto& b : net_.devices.bess) s.soc.push_back(b.soc_init);
  s.solar.assign(window_, day.total_solar(0));
  s.wind.assign(window_, day.total_wind(0));
  s.load.assign(window_, day.total_load(0));
  s.price_buy = day.price_buy[0];
  return s;
}

double MicrogridEnv::charge_limit_kw(std::size_t d, double soc) const {
  const auto& b = net_.devices.bess[d];
  const double lim = (b.soc_max - soc) * b.e_cap / (b.eta_ch * scenario_.dt_hours);
  return std::clamp(lim, 0.0, b.p_max);
}

double MicrogridEnv::discharge_limit_kw(std::size_t d, double soc) const {
  const auto& b = net_.devices.bess[d];
  const double lim = (soc - b.soc_min) * b.e_cap * b.eta_dis / scenario_.dt_hours;
  return std::clamp(lim, 0.0, b.p_max);
}

std::vector<double> MicrogridEnv::clip(const std::vector<double>& kw, const EnvState& state,
                                       std::vector<bool>* flags) const {
  const std::size_t n = net_.devices.bess.size();
  if (kw.size() != n || state.soc.size() != n) {
    throw ValidationError(fmt::format("expected {} BESS powers", n));
  }
  std::vector<double> out(n);
  if (flags) flags->assign(n, false);
  for (std::size_t d = 0; d < n; ++d) {
    const double lim =
        kw[d] > 0.0 ? discharge_limit_kw(d, state.soc[d]) : charge_limit_kw(d, state.soc[d]);
    out[d] = kw[d];
    if (std::abs(kw[d]) > lim) {
      out[d] = std::copysign(lim, kw[d]);
      if (flags) (*flags)[d] = true;
    }
  }
  return out;
}

std::vector<double> MicrogridEnv::feasible_clip(const std::vector<std::size_t>& levels,
                                                const EnvState& state,
                                                std::vector<bool>* flags) const {
  return clip(actions_.to_kw(levels), state, flags);
}

double MicrogridEnv::next_soc(std::size_t d, double soc, double kw) const {
  const auto& b = net_.devices.bess[d];
  const double ch = kw < 0.0 ? -kw : 0.0;
  const double dis = kw > 0.0 ? kw : 0.0;
  const double next = soc + (b.eta_ch * ch - dis / b.eta_dis) * scenario_.dt_hours / b.e_cap;
  return std::clamp(next, b.soc_min, b.soc_max);
}

StepOutcome MicrogridEnv::step(const EnvState& state, const std::vector<std::size_t>& levels,
                               const SolverOptions& options) const {
  return step_powers(state, actions_.to_kw(levels), options);
}

StepOutcome MicrogridEnv::step_powers(const EnvState& state, const std::vector<double>& kw,
                                      const SolverOptions& options) const {
  if (!state.day) throw ValidationError("state has no day attached");
  const std::size_t T = steps();
  if (state.t >= T) throw ValidationError("step called on a terminal state");
  const ExogenousDay& day = *state.day;

  StepOutcome out;
  out.bess_kw = clip(kw, state, &out.clipped);
  const OpfInstance in =
      make_instance(day, state.t, net_.topology, net_.devices, out.bess_kw, state.prev_dg_kw);
  out.solution = solve_opf(in, net_.topology, net_.devices, scenario_, options);
  out.reward = -out.solution.cost.total();

  EnvState& n = out.next;
  n.day = state.day;
  n.t = state.t + 1;
  n.soc.resize(state.soc.size());
  for (std::size_t d = 0; d < state.soc.size(); ++d) {
    n.soc[d] = next_soc(d, state.soc[d], out.bess_kw[d]);
  }
  n.prev_dg_kw = out.solution.dg_p_kw;
  out.terminal = n.t == T;
  const std::size_t src = out.terminal ? state.t : n.t;
  auto advance = [&](const std::vector<double>& w, double v) {
    std::vector<double> r(w.begin() + 1, w.end());
    r.push_back(v);
    return r;
  };
  n.solar = advance(state.solar, day.total_solar(src));
  n.wind = advance(state.wind, day.total_wind(src));
  n.load = advance(state.load, day.total_load(src));
  n.price_buy = day.price_buy[src];
  return out;
}

Observation MicrogridEnv::observe(const EnvState& state) const {
  Observation o;
  o.history.resize(static_cast<Eigen::Index>(window_), 3);
  for (std::size_t i = 0; i < window_; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    o.history(r, 0) = state.solar[i] / solar_scale_;
    o.history(r, 1) = state.wind[i] / wind_scale_;
    o.history(r, 2) = state.load[i] / load_scale_;
  }
  const std::size_t n = state.soc.size();
  o.scalars.resize(static_cast<Eigen::Index>(n + 3));
  for (std::size_t d = 0; d < n; ++d) o.scalars[static_cast<Eigen::Index>(d)] = state.soc[d];
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(state.t) /
                       static_cast<double>(steps());
  o.scalars[static_cast<Eigen::Index>(n)] = state.price_buy / config_.price_scale;
  o.scalars[static_cast<Eigen::Index>(n + 1)] = std::sin(phase);
  o.scalars[static_cast<Eigen::Index>(n + 2)] = std::cos(phase);
  return o;
}

}  // namespace branchgrid

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


// One day of microgrid operation as an episodic decision process. The
// agent fixes the BESS powers; everything else is dispatched by the OPF.
// Positive BESS power means discharge.

#ifndef BRANCHGRID_ENV_HPP_
#define BRANCHGRID_ENV_HPP_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "branchgrid/grid_model.hpp"
#include "branchgrid/opf.hpp"

namespace branchgrid {

class ActionSpace {
 public:
  ActionSpace() = default;
  // n levels spread uniformly over [-p_max, +p_max] of every BESS.
  ActionSpace(const DeviceSet& devices, std::size_t levels);

  std::size_t branches() const { return p_max_.size(); }
  std::size_t levels() const { return levels_; }
  double level_kw(std::size_t device, std::size_t level) const;
  std::vector<double> to_kw(const std::vector<std::size_t>& levels) const;
  // Index of the idle level (n odd) or the level nearest to zero.
  std::size_t idle_level() const;

 private:
  std::size_t levels_ = 0;
  std::vector<double> p_max_;
};

struct EnvConfig {
  std::size_t levels = 11;
  double history_hours = 24.0;
  // Observation scales; zero means derive from the device ratings.
  double solar_scale_kw = 0.0;
  double wind_scale_kw = 0.0;
  double load_scale_kw = 0.0;
  double price_scale = 0.1;  // $/kWh
};

// Network input derived from an EnvState.
struct Observation {
  Eigen::MatrixXd history;  // window x 3 (solar, wind, load), scaled
  Eigen::VectorXd scalars;  // SoC per BESS, price, sin, cos
  friend bool operator==(const Observation& a, const Observation& b) {
    return a.history == b.history && a.scalars == b.scalars;
  }
};

struct EnvState {
  std::size_t t = 0;
  std::vector<double> soc;
  // Aggregate kW over the last `window` steps ending at t; steps before the
  // start of the day repeat the first value.
  std::vector<double> solar, wind, load;
  double price_buy = 0.0;
  std::vector<double> prev_dg_kw;  // empty at t = 0
  const ExogenousDay* day = nullptr;
};

struct StepOutcome {
  double reward = 0.0;  // -(solution.cost.total())
  EnvState next;
  std::vector<double> bess_kw;  // after clipping
  std::vector<bool> clipped;
  OpfSolution solution;
  bool terminal = false;
};

class MicrogridEnv {
 public:
  MicrogridEnv(NetworkFile network, ScenarioConfig scenario, EnvConfig config = {});

  const NetworkTopology& topology() const { return net_.topology; }
  const DeviceSet& devices() const { return net_.devices; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const EnvConfig& config() const { return config_; }
  const ActionSpace& actions() const { return actions_; }
  std::size_t window() const { return window_; }
  std::size_t steps() const { return scenario_.steps_per_day(); }
  std::size_t scalar_features() const { return net_.devices.bess.size() + 3; }

  // `day` must outlive every state derived from it.
  EnvState reset(const ExogenousDay& day) const;

  // Largest charge / discharge powers (kW, >= 0) keeping SoC in bounds.
  double charge_limit_kw(std::size_t device, double soc) const;
  double discharge_limit_kw(std::size_t device, double soc) const;

  // Magnitude-reducing clip of requested powers; flags mark reductions.
  std::vector<double> clip(const std::vector<double>& kw, const EnvState& state,
                           std::vector<bool>* flags = nullptr) const;
  std::vector<double> feasible_clip(const std::vector<std::size_t>& levels,
                                    const EnvState& state,
                                    std::vector<bool>* flags = nullptr) const;

  StepOutcome step(const EnvState& state, const std::vector<std::size_t>& levels,
                   const SolverOptions& options = {}) const;
  StepOutcome step_powers(const EnvState& state, const std::vector<double>& kw,
                          const SolverOptions& options = {}) const;

  Observation observe(const EnvState& state) const;

  // SoC after applying `kw` for one period.
  double next_soc(std::size_t device, double soc, double kw) const;

 private:
  NetworkFile net_;
  ScenarioConfig scenario_;
  EnvConfig config_;
  ActionSpace actions_;
  std::size_t window_ = 1;
  double solar_scale_ = 1.0, wind_scale_ = 1.0, load_scale_ = 1.0;
};

}  // namespace branchgrid

#endif  // BRANCHGRID_ENV_HPP_

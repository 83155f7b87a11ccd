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

// Static microgrid description, exogenous day series and the synthetic
// data generator.
//
// Units: powers in kW/kvar, energies in kWh, prices in $/kWh, impedances
// and squared voltages/currents in per unit on (base_kva, base_kv).

#ifndef BRANCHGRID_GRID_MODEL_HPP_
#define BRANCHGRID_GRID_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace branchgrid {

struct Bus {
  int id = 0;
  double v_min = 0.81;  // p.u.^2
  double v_max = 1.21;  // p.u.^2
  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;      // p.u.
  double x = 0.0;      // p.u.
  double l_max = 1.0;  // p.u.^2
  friend bool operator==(const Branch&, const Branch&) = default;
};

// Radial feeder. Construct through make_topology() so the orientation
// tables are populated and the tree invariant is checked.
struct NetworkTopology {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  int root = 0;
  double base_kva = 1000.0;
  double base_kv = 12.66;

  // Derived tables (bus indices are positions in `buses`).
  std::vector<int> parent_branch;  // -1 for the root
  std::vector<int> parent_bus;     // -1 for the root
  std::vector<std::vector<int>> child_branches;
  std::vector<int> branch_head;  // sending-end (parent side) bus index
  std::vector<int> branch_tail;  // receiving-end bus index
  std::vector<int> bfs_order;    // root first
  std::map<int, int> index_of;   // bus id -> index

  std::size_t bus_index(int bus_id) const;
  std::size_t root_index() const { return bus_index(root); }

  friend bool operator==(const NetworkTopology& a, const NetworkTopology& b) {
    return a.buses == b.buses && a.branches == b.branches &&
           a.root == b.root && a.base_kva == b.base_kva &&
           a.base_kv == b.base_kv;
  }
};

// Validates the tree invariant and element bounds, then fills the derived
// orientation tables. Throws ValidationError naming the first violation.
NetworkTopology make_topology(std::vector<Bus> buses,
                              std::vector<Branch> branches, int root,
                              double base_kva, double base_kv);

struct ControllableDg {
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;  // kW
  double q_min = 0.0, q_max = 0.0;  // kvar
  double ramp = 0.0;                // kW per period
  double a = 0.0;                   // $/kW^2h
  double b = 0.0;                   // $/kWh
  double c = 0.0;                   // $/h
  friend bool operator==(const ControllableDg&,
                         const ControllableDg&) = default;
};

enum class RenewableKind { kSolar, kWind };

struct RenewableUnit {
  int bus = 0;
  RenewableKind kind = RenewableKind::kSolar;
  double rated = 0.0;  // kW
  friend bool operator==(const RenewableUnit&,
                         const RenewableUnit&) = default;
};

struct Bess {
  int bus = 0;
  double e_cap = 0.0;  // kWh
  double p_max = 0.0;  // kW, both directions
  double eta_ch = 1.0;
  double eta_dis = 1.0;
  double soc_min = 0.0;
  double soc_max = 1.0;
  double soc_init = 0.5;
  double k_b = 0.0;  // $/kWh throughput
  friend bool operator==(const Bess&, const Bess&) = default;
};

struct Load {
  int bus = 0;
  double pf_angle = 0.0;    // rad; q = p * tan(pf_angle)
  double nominal_kw = 0.0;  // scale used by the synthetic generator only
  friend bool operator==(const Load&, const Load&) = default;
};

struct DeviceSet {
  std::vector<ControllableDg> dgs;
  std::vector<RenewableUnit> renewables;
  std::vector<Bess> bess;
  std::vector<Load> loads;
  double p_grid_max = 0.0;  // kW, both directions at the root
  friend bool operator==(const DeviceSet&, const DeviceSet&) = default;
};

// Throws ValidationError. Also checks every device sits on a known bus.
void validate_devices(const DeviceSet& devices, const NetworkTopology& topo);

struct ScenarioConfig {
  double dt_hours = 1.0;
  double horizon_hours = 24.0;
  double curtail_price = 0.05;  // $/kWh
  double penalty_price = 5.0;   // $/kWh of slack
  std::size_t steps_per_day() const;
  void validate() const;
};

// One day of exogenous series. Renewable and load series are keyed by the
// device's position in DeviceSet::renewables / DeviceSet::loads.
struct ExogenousDay {
  int day_id = 0;
  std::map<int, std::vector<double>> solar;
  std::map<int, std::vector<double>> wind;
  std::map<int, std::vector<double>> load;
  std::vector<double> price_buy;
  std::vector<double> price_sell;

  std::size_t steps() const { return price_buy.size(); }
  double total_solar(std::size_t step) const;
  double total_wind(std::size_t step) const;
  double total_load(std::size_t step) const;
  // Availability of renewable `index` at `step` (kW).
  double renewable(std::size_t index, RenewableKind kind,
                   std::size_t step) const;

  friend bool operator==(const ExogenousDay&, const ExogenousDay&) = default;
};

// Throws ValidationError when a series is missing for a device or the
// length differs from the configured horizon.
void check_day_compatible(const ExogenousDay& day, const DeviceSet& devices,
                          const ScenarioConfig& cfg);

struct NetworkFile {
  NetworkTopology topology;
  DeviceSet devices;
  friend bool operator==(const NetworkFile&, const NetworkFile&) = default;
};

NetworkFile load_network(const std::string& path);
NetworkFile parse_network(const std::string& json_text);
std::string network_to_json(const NetworkFile& net);
void write_network(const std::string& path, const NetworkFile& net);

// Reads the `day,step,device_id,kind,value` CSV. When `cfg` is given the
// series length of every day must equal cfg->steps_per_day().
std::vector<ExogenousDay> load_dataset(const std::string& path,
                                       const ScenarioConfig* cfg = nullptr);
std::vector<ExogenousDay> parse_dataset(const std::string& csv_text,
                                        const ScenarioConfig* cfg = nullptr);
std::string dataset_to_csv(const std::vector<ExogenousDay>& days);
void write_dataset(const std::string& path,
                   const std::vector<ExogenousDay>& days);

struct SynthProfile {
  std::vector<RenewableUnit> renewables;
  std::vector<double> load_nominal_kw;
  double dt_hours = 1.0;
  double horizon_hours = 24.0;
  double sunrise_hour = 6.0;
  double sunset_hour = 18.0;
  double solar_noise = 0.15;   // relative
  double wind_mean = 0.35;     // fraction of rated
  double wind_ar = 0.85;       // AR(1) coefficient
  double wind_sigma = 0.08;    // fraction of rated
  double morning_peak_hour = 8.0;
  double evening_peak_hour = 19.0;
  double load_base = 0.55;     // fraction of nominal at the trough
  double load_noise = 0.05;    // relative
  double day_start_hour = 8.0;   // high price tier [start, end)
  double day_end_hour = 22.0;
  double day_price = 0.25;
  double night_price = 0.08;
  double price_noise = 0.05;   // relative
  double sell_ratio = 0.6;     // sell = ratio * buy
};

// Profile whose device list and load scales mirror `devices`.
SynthProfile profile_for(const DeviceSet& devices, const ScenarioConfig& cfg);

// Deterministic in `seed`. Out-of-range profile parameters are clamped and
// each clamp is appended to `clamp_report` when it is non-null.
std::vector<ExogenousDay> synth_dataset(
    std::uint64_t seed, std::size_t days, SynthProfile profile,
    std::vector<std::string>* clamp_report = nullptr);

bool is_day_hour(const SynthProfile& profile, std::size_t step);

}  // namespace branchgrid

#endif  // BRANCHGRID_GRID_MODEL_HPP_

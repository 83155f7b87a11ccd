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

#include "branchgrid/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "branchgrid/errors.hpp"

namespace branchgrid {
namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write file: " + path);
  out << text;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + byte, '\n'));
}

// Disjoint-set forest used by the tree check.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

double get_number(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ParseError(where + ": missing numeric field '" + key + "'");
  }
  return it->get<double>();
}

int get_int(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    throw ParseError(where + ": missing integer field '" + key + "'");
  }
  return it->get<int>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys,
                    const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    bool known = std::any_of(keys.begin(), keys.end(),
                             [&](const char* key) { return k == key; });
    if (!known) throw ParseError(where + ": unknown key '" + k + "'");
  }
}

const json& get_array(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) {
    throw ParseError(std::string("network: missing array '") + key + "'");
  }
  return *it;
}

const char* kind_name(RenewableKind kind) {
  return kind == RenewableKind::kSolar ? "solar" : "wind";
}

}  // namespace

std::size_t NetworkTopology::bus_index(int bus_id) const {
  auto it = index_of.find(bus_id);
  if (it == index_of.end()) {
    throw ValidationError(fmt::format("unknown bus id {}", bus_id));
  }
  return static_cast<std::size_t>(it->second);
}

NetworkTopology make_topology(std::vector<Bus> buses,
                              std::vector<Branch> branches, int root,
                              double base_kva, double base_kv) {
  NetworkTopology t;
  t.buses = std::move(buses);
  t.branches = std::move(branches);
  t.root = root;
  t.base_kva = base_kva;
  t.base_kv = base_kv;

  if (t.buses.empty()) throw ValidationError("topology has no buses");
  if (!(base_kva > 0.0) || !(base_kv > 0.0)) {
    throw ValidationError("base_kva and base_kv must be positive");
  }
  for (std::size_t i = 0; i < t.buses.size(); ++i) {
    const Bus& b = t.buses[i];
    if (!t.index_of.emplace(b.id, static_cast<int>(i)).second) {
      throw ValidationError(fmt::format("duplicate bus id {}", b.id));
    }
    if (!(b.v_min > 0.0 && b.v_min < b.v_max)) {
      throw ValidationError(
          fmt::format("bus {} violates 0 < v_min < v_max", b.id));
    }
  }
  if (!t.index_of.count(root)) {
    throw ValidationError(fmt::format("root bus {} is not a bus", root));
  }

  const std::size_t n = t.buses.size();
  UnionFind uf(n);
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (bus, branch)
  for (std::size_t k = 0; k < t.branches.size(); ++k) {
    const Branch& br = t.branches[k];
    if (!t.index_of.count(br.from) || !t.index_of.count(br.to)) {
      throw ValidationError(
          fmt::format("branch {} references an unknown bus", k));
    }
    if (!(br.r >= 0.0) || !(br.x >= 0.0)) {
      throw ValidationError(fmt::format("branch {} has negative impedance", k));
    }
    if (!(br.l_max > 0.0)) {
      throw ValidationError(fmt::format("branch {} violates l_max > 0", k));
    }
    const int a = t.index_of.at(br.from);
    const int b = t.index_of.at(br.to);
    if (!uf.unite(a, b)) throw ValidationError("topology has a cycle");
    adj[a].emplace_back(b, static_cast<int>(k));
    adj[b].emplace_back(a, static_cast<int>(k));
  }
  if (t.branches.size() + 1 != n) {
    throw ValidationError("topology is disconnected");
  }

  t.parent_branch.assign(n, -1);
  t.parent_bus.assign(n, -1);
  t.child_branches.assign(n, {});
  t.branch_head.assign(t.branches.size(), -1);
  t.branch_tail.assign(t.branches.size(), -1);
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  const int r_idx = t.index_of.at(root);
  frontier.push(r_idx);
  seen[r_idx] = true;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    t.bfs_order.push_back(u);
    for (auto [v, k] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = true;
      t.parent_bus[v] = u;
      t.parent_branch[v] = k;
      t.child_branches[u].push_back(k);
      t.branch_head[k] = u;
      t.branch_tail[k] = v;
      frontier.push(v);
    }
  }
  return t;
}

void validate_devices(const DeviceSet& d, const NetworkTopology& topo) {
  auto check_bus = [&](int bus, const std::string& what) {
    if (!topo.index_of.count(bus)) {
      throw ValidationError(
          fmt::format("{} is placed on unknown bus {}", what, bus));
    }
  };
  for (std::size_t i = 0; i < d.dgs.size(); ++i) {
    const auto& g = d.dgs[i];
    const std::string what = fmt::format("dg {}", i);
    check_bus(g.bus, what);
    if (!(g.p_min <= g.p_max)) throw ValidationError(what + " violates p_min <= p_max");
    if (!(g.q_min <= g.q_max)) throw ValidationError(what + " violates q_min <= q_max");
    if (!(g.ramp >= 0.0)) throw ValidationError(what + " has negative ramp");
    if (!(g.a >= 0.0 && g.b >= 0.0 && g.c >= 0.0)) {
      throw ValidationError(what + " has a negative cost coefficient");
    }
  }
  for (std::size_t i = 0; i < d.renewables.size(); ++i) {
    const std::string what = fmt::format("renewable {}", i);
    check_bus(d.renewables[i].bus, what);
    if (!(d.renewables[i].rated >= 0.0)) throw ValidationError(what + " has negative rating");
  }
  for (std::size_t i = 0; i < d.bess.size(); ++i) {
    const auto& b = d.bess[i];
    const std::string what = fmt::format("bess {}", i);
    check_bus(b.bus, what);
    if (!(b.e_cap > 0.0)) throw ValidationError(what + " violates e_cap > 0");
    if (!(b.p_max >= 0.0)) throw ValidationError(what + " has negative p_max");
    if (!(b.eta_ch > 0.0 && b.eta_ch <= 1.0) ||
        !(b.eta_dis > 0.0 && b.eta_dis <= 1.0)) {
      throw ValidationError(what + " efficiency outside (0, 1]");
    }
    if (!(b.soc_min >= 0.0 && b.soc_max <= 1.0 && b.soc_min < b.soc_max)) {
      throw ValidationError(what + " violates 0 <= soc_min < soc_max <= 1");
    }
    if (!(b.soc_init >= b.soc_min && b.soc_init <= b.soc_max)) {
      throw ValidationError(what + " violates soc_min <= soc_init <= soc_max");
    }
    if (!(b.k_b >= 0.0)) throw ValidationError(what + " has negative k_b");
  }
  for (std::size_t i = 0; i < d.loads.size(); ++i) {
    const std::string what = fmt::format("load {}", i);
    check_bus(d.loads[i].bus, what);
    if (!(d.loads[i].nominal_kw >= 0.0)) throw ValidationError(what + " has negative nominal_kw");
  }
  if (!(d.p_grid_max >= 0.0)) throw ValidationError("p_grid_max is negative");
}

std::size_t ScenarioConfig::steps_per_day() const {
  return static_cast<std::size_t>(std::llround(horizon_hours / dt_hours));
}

void ScenarioConfig::validate() const {
  if (!(dt_hours > 0.0)) throw ValidationError("dt_hours must be positive");
  const double ratio = horizon_hours / dt_hours;
  if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw ValidationError("horizon_hours must be an integer multiple of dt_hours");
  }
  if (!(curtail_price >= 0.0)) throw ValidationError("curtail_price is negative");
  if (!(penalty_price > 0.0)) throw ValidationError("penalty_price must be positive");
}

double ExogenousDay::total_solar(std::size_t step) const {
  double s = 0.0;
  for (const auto& [_, series] : solar) s += series.at(step);
  return s;
}

double ExogenousDay::total_wind(std::size_t step) const {
  double s = 0.0;
  for (const auto& [_, series] : wind) s += series.at(step);
  return s;
}

double ExogenousDay::total_load(std::size_t step) const {
  double s = 0.0;
  for (const auto& [_, series] : load) s += series.at(step);
  return s;
}

double ExogenousDay::renewable(std::size_t index, RenewableKind kind,
                               std::size_t step) const {
  const auto& m = kind == RenewableKind::kSolar ? solar : wind;
  auto it = m.find(static_cast<int>(index));
  if (it == m.end()) {
    throw ValidationError(fmt::format("day {} has no {} series for device {}",
                                      day_id, kind_name(kind), index));
  }
  return it->second.at(step);
}

void check_day_compatible(const ExogenousDay& day, const DeviceSet& devices,
                          const ScenarioConfig& cfg) {
  const std::size_t steps = cfg.steps_per_day();
  auto check_len = [&](const std::vector<double>& s, const std::string& what) {
    if (s.size() != steps) {
      throw ValidationError(fmt::format(
          "day {}: {} has {} steps, expected {}", day.day_id, what, s.size(), steps));
    }
  };
  check_len(day.price_buy, "price_buy");
  check_len(day.price_sell, "price_sell");
  for (std::size_t i = 0; i < devices.renewables.size(); ++i) {
    const auto kind = devices.renewables[i].kind;
    const auto& m = kind == RenewableKind::kSolar ? day.solar : day.wind;
    auto it = m.find(static_cast<int>(i));
    if (it == m.end()) {
      throw ValidationError(fmt::format("day {} has no {} series for device {}",
                                        day.day_id, kind_name(kind), i));
    }
    check_len(it->second, fmt::format("{} {}", kind_name(kind), i));
  }
  for (std::size_t i = 0; i < devices.loads.size(); ++i) {
    auto it = day.load.find(static_cast<int>(i));
    if (it == day.load.end()) {
      throw ValidationError(
          fmt::format("day {} has no load series for device {}", day.day_id, i));
    }
    check_len(it->second, fmt::format("load {}", i));
  }
}

NetworkFile parse_network(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("network: line {}: {}", line_of(text, e.byte),
                                 e.what()));
  }
  if (!doc.is_object()) throw ParseError("network: top level must be an object");
  reject_unknown(doc,
                 {"buses", "branches", "dgs", "renewables", "bess", "loads",
                  "root", "base_kva", "base_kv", "p_grid_max"},
                 "network");

  std::vector<Bus> buses;
  for (std::size_t i = 0; const auto& b : get_array(doc, "buses")) {
    const std::string where = fmt::format("buses[{}]", i++);
    reject_unknown(b, {"id", "v_min", "v_max"}, where);
    buses.push_back({get_int(b, "id", where), get_number(b, "v_min", where),
                     get_number(b, "v_max", where)});
  }
  std::vector<Branch> branches;
  for (std::size_t i = 0; const auto& b : get_array(doc, "branches")) {
    const std::string where = fmt::format("branches[{}]", i++);
    reject_unknown(b, {"from", "to", "r", "x", "l_max"}, where);
    branches.push_back({get_int(b, "from", where), get_int(b, "to", where),
                        get_number(b, "r", where), get_number(b, "x", where),
                        get_number(b, "l_max", where)});
  }

  NetworkFile net;
  net.topology = make_topology(std::move(buses), std::move(branches),
                               get_int(doc, "root", "network"),
                               get_number(doc, "base_kva", "network"),
                               get_number(doc, "base_kv", "network"));

  DeviceSet& d = net.devices;
  for (std::size_t i = 0; const auto& g : get_array(doc, "dgs")) {
    const std::string where = fmt::format("dgs[{}]", i++);
    reject_unknown(g, {"bus", "p_min", "p_max", "q_min", "q_max", "ramp", "a", "b", "c"}, where);
    d.dgs.push_back({get_int(g, "bus", where), get_number(g, "p_min", where),
                     get_number(g, "p_max", where), get_number(g, "q_min", where),
                     get_number(g, "q_max", where), get_number(g, "ramp", where),
                     get_number(g, "a", where), get_number(g, "b", where),
                     get_number(g, "c", where)});
  }
  for (std::size_t i = 0; const auto& r : get_array(doc, "renewables")) {
    const std::string where = fmt::format("renewables[{}]", i++);
    reject_unknown(r, {"bus", "kind", "rated"}, where);
    auto kind = r.find("kind");
    if (kind == r.end() || !kind->is_string() ||
        (*kind != "solar" && *kind != "wind")) {
      throw ParseError(where + ": kind must be \"solar\" or \"wind\"");
    }
    d.renewables.push_back(
        {get_int(r, "bus", where),
         *kind == "solar" ? RenewableKind::kSolar : RenewableKind::kWind,
         get_number(r, "rated", where)});
  }
  for (std::size_t i = 0; const auto& b : get_array(doc, "bess")) {
    const std::string where = fmt::format("bess[{}]", i++);
    reject_unknown(b, {"bus", "e_cap", "p_max", "eta_ch", "eta_dis", "soc_min",
                       "soc_max", "soc_init", "k_b"}, where);
    d.bess.push_back({get_int(b, "bus", where), get_number(b, "e_cap", where),
                      get_number(b, "p_max", where), get_number(b, "eta_ch", where),
                      get_number(b, "eta_dis", where), get_number(b, "soc_min", where),
                      get_number(b, "soc_max", where), get_number(b, "soc_init", where),
                      get_number(b, "k_b", where)});
  }
  for (std::size_t i = 0; const auto& l : get_array(doc, "loads")) {
    const std::string where = fmt::format("loads[{}]", i++);
    reject_unknown(l, {"bus", "pf_angle", "nominal_kw"}, where);
    Load load{get_int(l, "bus", where), get_number(l, "pf_angle", where), 0.0};
    if (l.contains("nominal_kw")) load.nominal_kw = get_number(l, "nominal_kw", where);
    d.loads.push_back(load);
  }
  d.p_grid_max = get_number(doc, "p_grid_max", "network");
  validate_devices(d, net.topology);
  return net;
}

NetworkFile load_network(const std::string& path) {
  return parse_network(read_file(path));
}

std::string network_to_json(const NetworkFile& net) {
  const auto& t = net.topology;
  const auto& d = net.devices;
  json doc;
  doc["root"] = t.root;
  doc["base_kva"] = t.base_kva;
  doc["base_kv"] = t.base_kv;
  doc["p_grid_max"] = d.p_grid_max;
  doc["buses"] = json::array();
  for (const auto& b : t.buses) {
    doc["buses"].push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}});
  }
  doc["branches"] = json::array();
  for (const auto& b : t.branches) {
    doc["branches"].push_back(
        {{"from", b.from}, {"to", b.to}, {"r", b.r}, {"x", b.x}, {"l_max", b.l_max}});
  }
  doc["dgs"] = json::array();
  for (const auto& g : d.dgs) {
    doc["dgs"].push_back({{"bus", g.bus}, {"p_min", g.p_min}, {"p_max", g.p_max},
                          {"q_min", g.q_min}, {"q_max", g.q_max}, {"ramp", g.ramp},
                          {"a", g.a}, {"b", g.b}, {"c", g.c}});
  }
  doc["renewables"] = json::array();
  for (const auto& r : d.renewables) {
    doc["renewables"].push_back(
        {{"bus", r.bus}, {"kind", kind_name(r.kind)}, {"rated", r.rated}});
  }
  doc["bess"] = json::array();
  for (const auto& b : d.bess) {
    doc["bess"].push_back({{"bus", b.bus}, {"e_cap", b.e_cap}, {"p_max", b.p_max},
                           {"eta_ch", b.eta_ch}, {"eta_dis", b.eta_dis},
                           {"soc_min", b.soc_min}, {"soc_max", b.soc_max},
                           {"soc_init", b.soc_init}, {"k_b", b.k_b}});
  }
  doc["loads"] = json::array();
  for (const auto& l : d.loads) {
    doc["loads"].push_back(
        {{"bus", l.bus}, {"pf_angle", l.pf_angle}, {"nominal_kw", l.nominal_kw}});
  }
  return doc.dump(2) + "\n";
}

void write_network(const std::string& path, const NetworkFile& net) {
  write_file(path, network_to_json(net));
}

namespace {

enum class SeriesKind { kSolar, kWind, kLoad, kPriceBuy, kPriceSell };

bool parse_kind(const std::string& s, SeriesKind& out) {
  static const std::pair<const char*, SeriesKind> kinds[] = {
      {"solar", SeriesKind::kSolar},
      {"wind", SeriesKind::kWind},
      {"load", SeriesKind::kLoad},
      {"price_buy", SeriesKind::kPriceBuy},
      {"price_sell", SeriesKind::kPriceSell}};
  for (auto [name, k] : kinds) {
    if (s == name) {
      out = k;
      return true;
    }
  }
  return false;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<ExogenousDay> parse_dataset(const std::string& text,
                                        const ScenarioConfig* cfg) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("dataset: empty file");
  ++lineno;
  const auto header = split_csv(line);
  const char* required[] = {"day", "step", "device_id", "kind", "value"};
  std::size_t col[5];
  for (int i = 0; i < 5; ++i) {
    auto it = std::find(header.begin(), header.end(), required[i]);
    if (it == header.end()) {
      throw ParseError(std::string("dataset: missing column '") + required[i] + "'");
    }
    col[i] = static_cast<std::size_t>(it - header.begin());
  }

  // day -> (kind, device) -> step -> value
  std::map<int, std::map<std::pair<SeriesKind, int>, std::map<std::size_t, double>>> raw;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError(fmt::format("dataset: line {}: expected {} cells, got {}",
                                   lineno, header.size(), cells.size()));
    }
    SeriesKind kind;
    if (!parse_kind(cells[col[3]], kind)) {
      throw ParseError(fmt::format("dataset: line {}: unknown kind '{}'", lineno,
                                   cells[col[3]]));
    }
    int day = 0, device = 0;
    long step = 0;
    double value = 0.0;
    try {
      std::size_t used = 0;
      day = std::stoi(cells[col[0]], &used);
      if (used != cells[col[0]].size()) throw std::invalid_argument("day");
      step = std::stol(cells[col[1]], &used);
      if (used != cells[col[1]].size()) throw std::invalid_argument("step");
      device = std::stoi(cells[col[2]], &used);
      if (used != cells[col[2]].size()) throw std::invalid_argument("device_id");
      value = std::stod(cells[col[4]], &used);
      if (used != cells[col[4]].size()) throw std::invalid_argument("value");
    } catch (const std::exception&) {
      throw ParseError(fmt::format("dataset: line {}: malformed number", lineno));
    }
    if (step < 0) throw ParseError(fmt::format("dataset: line {}: negative step", lineno));
    if (!std::isfinite(value)) {
      throw ParseError(fmt::format("dataset: line {}: non-finite value", lineno));
    }
    if (value < 0.0) {
      throw ValidationError(fmt::format("dataset: line {}: negative {} value",
                                        lineno, cells[col[3]]));
    }
    auto& series = raw[day][{kind, device}];
    if (!series.emplace(static_cast<std::size_t>(step), value).second) {
      throw ParseError(fmt::format("dataset: line {}: duplicate entry", lineno));
    }
  }

  std::vector<ExogenousDay> days;
  for (auto& [day_id, series_map] : raw) {
    ExogenousDay day;
    day.day_id = day_id;
    std::size_t length = 0;
    bool first = true;
    for (auto& [key, steps] : series_map) {
      std::vector<double> values;
      for (std::size_t i = 0; auto& [s, v] : steps) {
        if (s != i++) {
          throw ValidationError(fmt::format("day {}: ragged day length (gap at step {})",
                                            day_id, i - 1));
        }
        values.push_back(v);
      }
      if (first) {
        length = values.size();
        first = false;
      } else if (values.size() != length) {
        throw ValidationError(fmt::format("day {}: ragged day length", day_id));
      }
      switch (key.first) {
        case SeriesKind::kSolar: day.solar[key.second] = std::move(values); break;
        case SeriesKind::kWind: day.wind[key.second] = std::move(values); break;
        case SeriesKind::kLoad: day.load[key.second] = std::move(values); break;
        case SeriesKind::kPriceBuy: day.price_buy = std::move(values); break;
        case SeriesKind::kPriceSell: day.price_sell = std::move(values); break;
      }
    }
    if (day.price_buy.empty() || day.price_sell.empty()) {
      throw ValidationError(fmt::format("day {}: missing price series", day_id));
    }
    if (cfg && length != cfg->steps_per_day()) {
      throw ValidationError(fmt::format("day {}: ragged day length {} (expected {})",
                                        day_id, length, cfg->steps_per_day()));
    }
    for (std::size_t s = 0; s < length; ++s) {
      if (day.price_sell[s] > day.price_buy[s]) {
        throw ValidationError(fmt::format(
            "day {} step {}: price ordering violated (price_sell > price_buy)", day_id, s));
      }
    }
    days.push_back(std::move(day));
  }
  if (days.empty()) throw ValidationError("dataset: no rows");
  return days;
}

std::vector<ExogenousDay> load_dataset(const std::string& path,
                                       const ScenarioConfig* cfg) {
  return parse_dataset(read_file(path), cfg);
}

std::string dataset_to_csv(const std::vector<ExogenousDay>& days) {
  std::string out = "day,step,device_id,kind,value\n";
  for (const auto& d : days) {
    for (std::size_t s = 0; s < d.steps(); ++s) {
      for (const auto& [id, series] : d.solar) {
        out += fmt::format("{},{},{},solar,{}\n", d.day_id, s, id, series[s]);
      }
      for (const auto& [id, series] : d.wind) {
        out += fmt::format("{},{},{},wind,{}\n", d.day_id, s, id, series[s]);
      }
      for (const auto& [id, series] : d.load) {
        out += fmt::format("{},{},{},load,{}\n", d.day_id, s, id, series[s]);
      }
      out += fmt::format("{},{},0,price_buy,{}\n", d.day_id, s, d.price_buy[s]);
      out += fmt::format("{},{},0,price_sell,{}\n", d.day_id, s, d.price_sell[s]);
    }
  }
  return out;
}

void write_dataset(const std::string& path, const std::vector<ExogenousDay>& days) {
  write_file(path, dataset_to_csv(days));
}

SynthProfile profile_for(const DeviceSet& devices, const ScenarioConfig& cfg) {
  SynthProfile p;
  p.renewables = devices.renewables;
  for (const auto& l : devices.loads) p.load_nominal_kw.push_back(l.nominal_kw);
  p.dt_hours = cfg.dt_hours;
  p.horizon_hours = cfg.horizon_hours;
  return p;
}

bool is_day_hour(const SynthProfile& p, std::size_t step) {
  const double hour = std::fmod((static_cast<double>(step) + 0.5) * p.dt_hours, 24.0);
  return hour >= p.day_start_hour && hour < p.day_end_hour;
}

std::vector<ExogenousDay> synth_dataset(std::uint64_t seed, std::size_t days,
                                        SynthProfile p,
                                        std::vector<std::string>* report) {
  auto clamp = [&](double& v, double lo, double hi, const char* name) {
    const double c = std::clamp(v, lo, hi);
    if (c != v && report) {
      report->push_back(fmt::format("{} clamped from {} to {}", name, v, c));
    }
    v = c;
  };
  if (!(p.dt_hours > 0.0)) {
    if (report) report->push_back("dt_hours clamped to 1");
    p.dt_hours = 1.0;
  }
  clamp(p.horizon_hours, p.dt_hours, 24.0 * 366.0, "horizon_hours");
  clamp(p.sunrise_hour, 0.0, 24.0, "sunrise_hour");
  clamp(p.sunset_hour, p.sunrise_hour, 24.0, "sunset_hour");
  clamp(p.solar_noise, 0.0, 1.0, "solar_noise");
  clamp(p.wind_mean, 0.0, 1.0, "wind_mean");
  clamp(p.wind_ar, 0.0, 0.999, "wind_ar");
  clamp(p.wind_sigma, 0.0, 1.0, "wind_sigma");
  clamp(p.load_base, 0.0, 1.0, "load_base");
  clamp(p.load_noise, 0.0, 1.0, "load_noise");
  clamp(p.day_start_hour, 0.0, 24.0, "day_start_hour");
  clamp(p.day_end_hour, p.day_start_hour, 24.0, "day_end_hour");
  clamp(p.night_price, 0.0, 1e6, "night_price");
  clamp(p.day_price, 0.0, 1e6, "day_price");
  clamp(p.price_noise, 0.0, 0.5, "price_noise");
  clamp(p.sell_ratio, 0.0, 1.0, "sell_ratio");
  for (auto& r : p.renewables) clamp(r.rated, 0.0, 1e12, "renewable rated");
  for (auto& l : p.load_nominal_kw) clamp(l, 0.0, 1e12, "load nominal_kw");

  const auto steps = static_cast<std::size_t>(std::llround(p.horizon_hours / p.dt_hours));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto bump = [](double hour, double center, double width) {
    const double d = hour - center;
    return std::exp(-0.5 * d * d / (width * width));
  };

  std::vector<ExogenousDay> out;
  out.reserve(std::max<std::size_t>(days, 1));
  const std::size_t n_days = std::max<std::size_t>(days, 1);
  for (std::size_t d = 0; d < n_days; ++d) {
    ExogenousDay day;
    day.day_id = static_cast<int>(d);
    for (std::size_t i = 0; i < p.renewables.size(); ++i) {
      const auto& unit = p.renewables[i];
      std::vector<double> series(steps, 0.0);
      if (unit.kind == RenewableKind::kSolar) {
        for (std::size_t s = 0; s < steps; ++s) {
          const double hour = std::fmod((static_cast<double>(s) + 0.5) * p.dt_hours, 24.0);
          const double noise = gauss(rng);
          if (hour <= p.sunrise_hour || hour >= p.sunset_hour) continue;
          const double shape = std::sin(std::numbers::pi * (hour - p.sunrise_hour) /
                                        (p.sunset_hour - p.sunrise_hour));
          series[s] = unit.rated * std::clamp(shape * (1.0 + p.solar_noise * noise), 0.0, 1.0);
        }
        day.solar[static_cast<int>(i)] = std::move(series);
      } else {
        double level = std::clamp(p.wind_mean + p.wind_sigma * gauss(rng), 0.0, 1.0);
        for (std::size_t s = 0; s < steps; ++s) {
          series[s] = unit.rated * level;
          level = std::clamp(p.wind_mean + p.wind_ar * (level - p.wind_mean) +
                                 p.wind_sigma * gauss(rng),
                             0.0, 1.0);
        }
        day.wind[static_cast<int>(i)] = std::move(series);
      }
    }
    for (std::size_t i = 0; i < p.load_nominal_kw.size(); ++i) {
      std::vector<double> series(steps);
      for (std::size_t s = 0; s < steps; ++s) {
        const double hour = std::fmod((static_cast<double>(s) + 0.5) * p.dt_hours, 24.0);
        const double peak = std::max(0.8 * bump(hour, p.morning_peak_hour, 2.0),
                                     bump(hour, p.evening_peak_hour, 2.5));
        const double shape = p.load_base + (1.0 - p.load_base) * peak;
        series[s] = p.load_nominal_kw[i] *
                    std::max(0.0, shape * (1.0 + p.load_noise * gauss(rng)));
      }
      day.load[static_cast<int>(i)] = std::move(series);
    }
    day.price_buy.resize(steps);
    day.price_sell.resize(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const double tier = is_day_hour(p, s) ? p.day_price : p.night_price;
      const double buy = tier * std::max(0.0, 1.0 + p.price_noise * gauss(rng));
      day.price_buy[s] = buy;
      day.price_sell[s] = p.sell_ratio * buy;
    }
    out.push_back(std::move(day));
  }
  if (days == 0) {
    if (report) report->push_back("days clamped from 0 to 1");
  }
  return out;
}

}  // namespace branchgrid

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


// Typed, strict JSON object reading shared by the config and checkpoint
// parsers. Every error is a ConfigError carrying the dotted key path.

#ifndef BRANCHGRID_CLI_JSON_FIELDS_HPP_
#define BRANCHGRID_CLI_JSON_FIELDS_HPP_

#include <cstdint>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "branchgrid/agent.hpp"
#include "branchgrid/errors.hpp"

namespace branchgrid::cli::detail {

using nlohmann::json;

class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return false;
    out = convert<T>(*v, key_path(key));
    return true;
  }

  template <class T>
  T require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(key_path(key) + ": required key is missing");
    return convert<T>(*v, key_path(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()) + ": unknown key");
    }
  }

  template <class T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path + ": expected a number");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw ConfigError(path + ": expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Network-independent agent fields.
inline json agent_hyper_json(const AgentConfig& c) {
  return json{{"gamma", c.gamma},
              {"eps_start", c.eps_start},
              {"eps_end", c.eps_end},
              {"eps_decay_steps", c.eps_decay_steps},
              {"lstm_hidden", c.lstm_hidden},
              {"trunk", c.trunk},
              {"head_hidden", c.head_hidden}};
}

inline void read_agent_hyper(Fields& f, AgentConfig& c) {
  f.get("gamma", c.gamma);
  f.get("eps_start", c.eps_start);
  f.get("eps_end", c.eps_end);
  f.get("eps_decay_steps", c.eps_decay_steps);
  f.get("lstm_hidden", c.lstm_hidden);
  f.get("trunk", c.trunk);
  f.get("head_hidden", c.head_hidden);
}

inline json agent_full_json(const AgentConfig& c) {
  json j = agent_hyper_json(c);
  j["branches"] = c.branches;
  j["levels"] = c.levels;
  j["window"] = c.window;
  j["scalar_features"] = c.scalar_features;
  return j;
}

inline AgentConfig read_agent_full(const json& j, const std::string& path) {
  Fields f(j, path);
  AgentConfig c;
  c.branches = f.require<std::size_t>("branches");
  c.levels = f.require<std::size_t>("levels");
  c.window = f.require<std::size_t>("window");
  c.scalar_features = f.require<std::size_t>("scalar_features");
  read_agent_hyper(f, c);
  f.finish();
  return c;
}

}  // namespace branchgrid::cli::detail

#endif  // BRANCHGRID_CLI_JSON_FIELDS_HPP_

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


#include "branchgrid/cli/checkpoint.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "branchgrid/errors.hpp"
#include "json_fields.hpp"

namespace branchgrid::cli {
namespace {

namespace fs = std::filesystem;
using detail::Fields;
using nlohmann::json;

constexpr const char* kFormatName = "branchgrid-checkpoint";

std::vector<TensorShape> shapes_of(const BdqNetwork& net) {
  std::vector<TensorShape> out;
  const auto& ps = net.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out.push_back({ps[i].name, static_cast<std::int64_t>(ps[i].value.rows()),
                   static_cast<std::int64_t>(ps[i].value.cols())});
  }
  return out;
}

std::uint64_t payload_size(const std::vector<TensorShape>& shapes) {
  std::uint64_t n = 0;
  for (const auto& s : shapes) n += static_cast<std::uint64_t>(s.rows * s.cols);
  return n * 8;
}

}  // namespace

std::vector<unsigned char> encode_le(const std::vector<double>& values) {
  std::vector<unsigned char> out;
  out.reserve(values.size() * 8);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
  }
  return out;
}

std::vector<double> decode_le(const std::vector<unsigned char>& bytes) {
  if (bytes.size() % 8 != 0) throw ConfigError("checkpoint payload is not a whole number of doubles");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string manifest_to_json(const CheckpointManifest& m) {
  json tensors = json::array();
  for (const auto& t : m.tensors) {
    tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  }
  const json j{{"format", kFormatName},
               {"format_version", m.format_version},
               {"agent", detail::agent_full_json(m.agent)},
               {"tensors", tensors},
               {"step", m.step},
               {"env_steps", m.env_steps},
               {"config_hash", m.config_hash},
               {"payload", m.payload},
               {"payload_bytes", m.payload_bytes}};
  return j.dump(2) + "\n";
}

CheckpointManifest parse_manifest(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  Fields f(doc, "checkpoint");
  if (f.require<std::string>("format") != kFormatName) {
    throw ConfigError("checkpoint.format: not a branchgrid checkpoint");
  }
  CheckpointManifest m;
  m.format_version = f.require<int>("format_version");
  if (m.format_version != kCheckpointVersion) {
    throw ConfigError(fmt::format("checkpoint.format_version: {} is not supported (expected {})",
                                  m.format_version, kCheckpointVersion));
  }
  const json* agent = f.find("agent");
  if (!agent) throw ConfigError("checkpoint.agent: required key is missing");
  m.agent = detail::read_agent_full(*agent, "checkpoint.agent");
  const json* tensors = f.find("tensors");
  if (!tensors || !tensors->is_array()) throw ConfigError("checkpoint.tensors: expected an array");
  for (std::size_t i = 0; i < tensors->size(); ++i) {
    Fields t((*tensors)[i], fmt::format("checkpoint.tensors[{}]", i));
    TensorShape s;
    s.name = t.require<std::string>("name");
    s.rows = t.require<std::int64_t>("rows");
    s.cols = t.require<std::int64_t>("cols");
    t.finish();
    m.tensors.push_back(s);
  }
  m.step = f.require<std::int64_t>("step");
  m.env_steps = f.require<std::int64_t>("env_steps");
  m.config_hash = f.require<std::string>("config_hash");
  m.payload = f.require<std::string>("payload");
  m.payload_bytes = f.require<std::uint64_t>("payload_bytes");
  f.finish();
  return m;
}

std::string save_checkpoint(const std::string& stem, const BdqNetwork& net, std::int64_t step,
                            std::int64_t env_steps, const std::string& config_hash) {
  CheckpointManifest m;
  m.agent = net.config();
  m.tensors = shapes_of(net);
  m.step = step;
  m.env_steps = env_steps;
  m.config_hash = config_hash;
  m.payload = fs::path(stem + ".bin").filename().string();
  m.payload_bytes = payload_size(m.tensors);

  const auto bytes = encode_le(net.params().flatten());
  const std::string bin = stem + ".bin", manifest = stem + ".json";
  {
    std::ofstream out(bin, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + bin);
  }
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  out << manifest_to_json(m);
  if (!out) throw std::runtime_error("cannot write " + manifest);
  return manifest;
}

BdqNetwork load_checkpoint(const std::string& manifest_path, CheckpointManifest* manifest) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + manifest_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  CheckpointManifest m = parse_manifest(ss.str());

  try {
    m.agent.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("checkpoint.agent: ") + e.what());
  }
  BdqNetwork net(m.agent, 0);
  const auto expected = shapes_of(net);
  if (expected.size() != m.tensors.size()) {
    throw ConfigError(fmt::format("checkpoint.tensors: {} tensors, agent layout has {}",
                                  m.tensors.size(), expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& a = expected[i];
    const auto& b = m.tensors[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) {
      throw ConfigError(fmt::format("checkpoint.tensors[{}]: {} {}x{} does not match layout {} {}x{}",
                                    i, b.name, b.rows, b.cols, a.name, a.rows, a.cols));
    }
  }
  if (m.payload_bytes != payload_size(m.tensors)) {
    throw ConfigError("checkpoint.payload_bytes: disagrees with the tensor shapes");
  }
  const fs::path bin = fs::path(manifest_path).parent_path() / m.payload;
  std::ifstream pin(bin, std::ios::binary);
  if (!pin) throw ConfigError("checkpoint.payload: cannot open " + bin.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(pin)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() != m.payload_bytes) {
    throw ConfigError(fmt::format("checkpoint.payload: {} bytes on disk, manifest says {}",
                                  bytes.size(), m.payload_bytes));
  }
  net.params().unflatten(decode_le(bytes));
  if (manifest) *manifest = std::move(m);
  return net;
}

}  // namespace branchgrid::cli

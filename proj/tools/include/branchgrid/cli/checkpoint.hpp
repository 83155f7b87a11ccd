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


// Checkpoint = JSON manifest + raw payload of little-endian IEEE-754
// doubles, tensors in manifest order, each column-major.

#ifndef BRANCHGRID_CLI_CHECKPOINT_HPP_
#define BRANCHGRID_CLI_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "branchgrid/agent.hpp"

namespace branchgrid::cli {

inline constexpr int kCheckpointVersion = 1;

struct TensorShape {
  std::string name;
  std::int64_t rows = 0, cols = 0;
};

struct CheckpointManifest {
  int format_version = kCheckpointVersion;
  AgentConfig agent;
  std::vector<TensorShape> tensors;
  std::int64_t step = 0;       // gradient steps taken
  std::int64_t env_steps = 0;
  std::string config_hash;
  std::string payload;         // file name, relative to the manifest
  std::uint64_t payload_bytes = 0;
};

// Writes `<stem>.json` and `<stem>.bin`; returns the manifest path.
std::string save_checkpoint(const std::string& stem, const BdqNetwork& net, std::int64_t step,
                            std::int64_t env_steps, const std::string& config_hash);

// Throws ConfigError on a missing file, version or layout mismatch, or a
// payload whose length disagrees with the tensor shapes.
BdqNetwork load_checkpoint(const std::string& manifest_path,
                           CheckpointManifest* manifest = nullptr);

std::string manifest_to_json(const CheckpointManifest& manifest);
CheckpointManifest parse_manifest(const std::string& json_text);

std::vector<unsigned char> encode_le(const std::vector<double>& values);
std::vector<double> decode_le(const std::vector<unsigned char>& bytes);

}  // namespace branchgrid::cli

#endif  // BRANCHGRID_CLI_CHECKPOINT_HPP_

// Copyright 2026 The Orchestra Authors.
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
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "orchestra/orchestrator/system_state.hpp"
#include "orchestra/persistence/digest.hpp"

namespace orchestra {

inline constexpr char kCheckpointMagic[8] = {'O', 'R', 'C', 'H', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t tick = 0;
  std::uint32_t sections = 0;
  Digest digest{};
};

struct Checkpoint {
  std::string path;
  std::uint64_t tick = 0;
  std::string digest;  // hex
};

/// Full file image: header, sections, trailing digest over everything
/// before it.
std::vector<std::uint8_t> encode_checkpoint(const SystemState& s);
/// Validates magic, version, digest, and every section length.
/// routing supplies the non-persisted routing constants.
SystemState decode_checkpoint(std::span<const std::uint8_t> bytes, const RoutingConfig& routing = {});
CheckpointHeader read_checkpoint_header(std::span<const std::uint8_t> bytes);

/// Hex digest a checkpoint of s would carry.
std::string state_digest(const SystemState& s);

/// Writes to a sibling temp file, then renames over path.
Checkpoint write_checkpoint(const SystemState& s, const std::string& path);
SystemState read_checkpoint(const std::string& path, const RoutingConfig& routing = {});

}  // namespace orchestra

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
#include <deque>
#include <string>
#include <vector>

#include "orchestra/agents/sim_agent.hpp"
#include "orchestra/consensus/consensus.hpp"
#include "orchestra/numerics/random.hpp"
#include "orchestra/routing/routing.hpp"

namespace orchestra {

struct CheckpointRef {
  std::uint64_t tick = 0;
  std::string path;
  std::string digest;  // lowercase hex, empty before the first checkpoint

  friend bool operator==(const CheckpointRef&, const CheckpointRef&) = default;
};

/// Everything a checkpoint captures. In-flight conversations, the learner
/// and logs live in the Orchestrator and are not part of it.
struct SystemState {
  StateDims dims;
  std::vector<SimAgent> agents;  // index == agent id
  RoutingTable routing;
  std::vector<double> omega;
  std::uint64_t tick = 0;
  EffectivenessWindow effectiveness;              // completed conversations
  std::vector<EffectivenessWindow> agent_effectiveness;  // per-agent E_j
  std::deque<std::vector<float>> utilization;     // per tick, per agent
  Matrix comm_counts;                             // handoffs i -> j
  RandomStream rng;
  CheckpointRef last_checkpoint;

  std::size_t size() const { return agents.size(); }
  std::vector<AgentState> agent_states() const;
  std::vector<std::uint32_t> live_ids() const;

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Utilization share of each live agent over the recorded history,
/// renormalized to sum to one. Uniform over live agents while nothing has
/// been served; dead agents get zero.
std::vector<double> utilization_shares(const SystemState& s);

}  // namespace orchestra

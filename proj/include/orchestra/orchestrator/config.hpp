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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orchestra/agents/sim_agent.hpp"
#include "orchestra/consensus/consensus.hpp"
#include "orchestra/convgen/generator.hpp"
#include "orchestra/routing/routing.hpp"
#include "orchestra/state/agent_state.hpp"
#include "orchestra/state/transition.hpp"

namespace orchestra {

enum class Variant : std::uint8_t { Full, NoConsensus, RoundRobin, StaticWeights };

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view s);
inline constexpr Variant kAllVariants[] = {Variant::Full, Variant::NoConsensus, Variant::RoundRobin,
                                           Variant::StaticWeights};

/// Environment: agent states evolve through the simulated world and the
/// transition network only learns them. Model: the network advances states.
enum class TransitionMode : std::uint8_t { Environment, Model };

/// Logical cost model. One tick is 100 ms; nothing here is wall clock.
struct TimingConfig {
  double tick_ms = 100.0;
  double base_ms = 50.0;
  double per_token_ms = 2.0;
  double handoff_ms = 20.0;
  /// Consensus cost per iteration per ordered agent pair.
  double consensus_unit_ms = 0.005;
  /// Routing cost per candidate agent scored.
  double routing_unit_ms = 0.02;
};

struct SimulationConfig {
  std::uint64_t seed = 42;
  int agents = 10;
  std::size_t corpus_size = 200;
  Variant variant = Variant::Full;
  bool parallel = false;
  int threads = 4;
  TransitionMode transition_mode = TransitionMode::Environment;

  StateDims dims;
  InitOptions init;
  int baselines_per_kind = 8;
  double baseline_spread = 0.15;

  ConsensusConfig consensus;
  RoutingConfig routing;
  ResponseConfig response;
  LearnerConfig learner;
  GeneratorConfig generator;
  /// Use the marginals as raw transition probabilities.
  bool direct_fsm = false;
  std::string grammar_path;  // empty: built-in rules

  TimingConfig timing;
  double arrivals_per_tick = 2.0;
  int agent_capacity = 6;  // turns an agent serves per tick
  int context_window = 20;
  int utilization_window = 100;
  int effectiveness_window = 100;
  int sliding_window = 100;  // conversations per aggregate window
  double lambda_coherence = 0.5;
  std::uint64_t embed_seed = 0x5eed;

  int checkpoint_interval = 1000;
  std::string checkpoint_dir;  // empty: no checkpoint files

  int probe_handoffs = 14;
  int probe_replicates = 8;
  int bootstrap_resamples = 10000;
  std::uint64_t max_ticks = 1'000'000;

  /// Every problem with the configuration, empty when valid.
  std::vector<std::string> validate() const;
};

/// Reads an INI file over the defaults. Unknown keys are rejected.
SimulationConfig load_config(const std::string& path, SimulationConfig base = {});
SimulationConfig parse_config(std::string_view text, SimulationConfig base = {});
/// INI text of every key, suitable for load_config.
std::string dump_config(const SimulationConfig& cfg);

}  // namespace orchestra

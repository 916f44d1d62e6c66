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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orchestra/convgen/grammar.hpp"
#include "orchestra/numerics/dense.hpp"
#include "orchestra/state/types.hpp"

namespace orchestra {

enum class FsmState : std::uint8_t {
  Greeting = 0,
  QueryFormulation = 1,
  InformationExchange = 2,
  Clarification = 3,
  Conclusion = 4
};
inline constexpr int kFsmStates = 5;
std::string_view to_string(FsmState s);
std::optional<FsmState> parse_fsm_state(std::string_view s);

/// Target share of turns spent in each state.
inline constexpr std::array<double, kFsmStates> kStateMarginals = {0.10, 0.20, 0.40, 0.20, 0.10};

/// Row-stochastic transition matrix (rows are from-states, Conclusion is
/// absorbing) whose expected visit counts per conversation are
/// (1, 2, 4, 2, 1), i.e. exactly the target marginals.
Matrix marginal_matching_transitions();
/// Reads the marginals as transition probabilities: every non-absorbing
/// state jumps according to the marginal vector.
Matrix direct_transitions(const std::array<double, kFsmStates>& marginals = kStateMarginals);
/// Removes a state by zeroing its column and renormalizing rows.
Matrix without_state(const Matrix& transitions, FsmState s);
/// Expected share of visits per state for a walk started in Greeting.
std::array<double, kFsmStates> expected_visit_shares(const Matrix& transitions);

struct ComplexityProfile {
  int parse_depth = 3;
  int entities = 5;
  int relations = 10;
  int inference_steps = 1;
  bool clamped = false;

  friend bool operator==(const ComplexityProfile&, const ComplexityProfile&) = default;
};

struct ComplexityRanges {
  int depth_lo = 3, depth_hi = 12;
  int entities_lo = 5, entities_hi = 50;
  int relations_lo = 10, relations_hi = 200;
  int inference_lo = 1, inference_hi = 8;
};

/// Raw counts from a derivation, before range clamping.
ComplexityProfile raw_complexity(const Derivation& d);
/// Counts from a derivation, clamped into the declared ranges (flagged).
ComplexityProfile complexity_annotation(const Derivation& d, const ComplexityRanges& r = {});
ComplexityProfile clamp_profile(ComplexityProfile p, const ComplexityRanges& r = {});

struct TriggerThresholds {
  int depth = 8;
  int entities = 20;
  int inference = 4;
};

/// Grammar if depth is exceeded, else Knowledge for entities, else Reasoning
/// for inference steps; thresholds are strict.
std::optional<SpecialistKind> trigger_check(const ComplexityProfile& p,
                                            const TriggerThresholds& t = {});

struct Turn {
  std::string speaker = "user";
  std::vector<std::string> tokens;
  FsmState state = FsmState::Greeting;
  ComplexityProfile profile;
  std::optional<SpecialistKind> trigger;
  std::vector<std::string> trigger_phrase;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::uint64_t seed = 0;
  TaskType task = TaskType::InformationRetrieval;
  std::vector<Turn> turns;
  std::vector<std::string> answer_key;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct GeneratorConfig {
  std::shared_ptr<const Grammar> grammar;  // null means Grammar::builtin()
  Matrix transitions = marginal_matching_transitions();
  std::array<double, 3> task_mix = {0.40, 0.35, 0.25};
  int max_depth = 12;
  int max_steps = 200;
  ComplexityRanges ranges;
  TriggerThresholds thresholds;

  const Grammar& rules() const { return grammar ? *grammar : Grammar::builtin(); }
};

TaskType sample_task_type(RandomStream& rng, const std::array<double, 3>& mix = {0.40, 0.35, 0.25});

/// Start symbol emitted for a state visit.
std::string start_symbol(FsmState s, TaskType task);

Conversation generate_conversation(std::uint64_t seed, const GeneratorConfig& cfg = {});

/// Conversations seeded base_seed + i.
std::vector<Conversation> generate_corpus(std::size_t n, std::uint64_t base_seed,
                                          const GeneratorConfig& cfg = {});

struct CorpusStats {
  std::size_t conversations = 0;
  std::size_t turns = 0;
  std::array<std::size_t, kFsmStates> visits{};
  std::array<std::size_t, 3> tasks{};
  std::array<std::size_t, 4> triggers{};  // indexed by SpecialistKind
  std::size_t clamped_profiles = 0;

  std::array<double, kFsmStates> visit_shares() const;
  std::array<double, 3> task_shares() const;
};

CorpusStats corpus_statistics(const std::vector<Conversation>& corpus);

}  // namespace orchestra

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
#include <string>
#include <vector>

#include "orchestra/convgen/generator.hpp"
#include "orchestra/convgen/grammar.hpp"
#include "orchestra/state/agent_state.hpp"
#include "orchestra/state/context_encoder.hpp"

namespace orchestra {

/// Ground-truth skill of a simulated agent. The capability matrix is the
/// system's estimate of this; the response model uses the truth.
struct Aptitude {
  std::array<double, 3> task{0.8, 0.8, 0.8};
  double trigger_match = 0.8;  // turns whose trigger names this agent's kind

  friend bool operator==(const Aptitude&, const Aptitude&) = default;
};

/// Draws an aptitude profile: specialists are strong on their own trigger
/// (0.95-0.98) and middling elsewhere (0.6-0.8); generalists sit at 0.75-0.85.
Aptitude draw_aptitude(SpecialistKind kind, RandomStream& rng);

struct SimAgent {
  AgentState state;
  SpecialistKind kind = SpecialistKind::Generalist;
  double rho = 1.0;
  Aptitude aptitude;
  RandomStream rng;
  bool live = true;

  std::uint32_t id() const { return state.agent_id; }
  /// Capability alignment for a turn of a task.
  double alignment(const Turn& turn, TaskType task) const;

  friend bool operator==(const SimAgent&, const SimAgent&) = default;
};

struct ResponseConfig {
  double kappa = 6.0;
  int recall_tokens = 6;
  double fidelity_floor = 0.7;
  /// Scale handoff fidelity by prompt agreement as well as capability
  /// similarity.
  bool prompt_compatibility = true;
  int max_depth = 12;
  std::uint64_t pattern_seed = 0x9a77;
};

struct Response {
  std::vector<std::string> tokens;
  std::vector<std::string> included;  // answer tokens the agent produced
  std::vector<std::string> recalled;
  std::size_t pattern = 0;
  double alignment = 0.0;
};

struct ContextTransfer {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  Vector context;
  double fidelity = 1.0;
};

/// f c + (1 - f) n with n Gaussian noise of norm |c|, rescaled to |c|.
Vector context_drift(const Vector& context, double fidelity, RandomStream& rng);

/// Deterministic response generator standing in for a language model.
class ResponseModel {
 public:
  ResponseModel(const Grammar& grammar, const TokenEmbedder& embedder, int prompt_dim,
                ResponseConfig cfg = {});

  const ResponseConfig& config() const { return cfg_; }
  std::size_t pattern_count() const { return static_cast<std::size_t>(keys_.cols()); }

  /// rho * sigmoid(kappa (a - 0.5)); exactly rho once a >= 1.
  double inclusion_probability(double alignment, double rho) const;

  /// Response template preferred by a prompt: argmax over template keys.
  std::size_t choose_pattern(const VectorF& prompt) const;
  /// Filler of a template for one conversation, with a "<content>" slot.
  std::vector<std::string> pattern_tokens(std::size_t pattern, std::uint64_t conversation_seed) const;
  /// Top recall_tokens distinct candidates by <context, embedding>.
  std::vector<std::string> recall(const Vector& context, const std::vector<std::string>& candidates) const;

  /// Template and recall only: what an agent reproduces of the context.
  std::vector<std::string> echo(const VectorF& prompt, std::uint64_t conversation_seed,
                                const std::vector<std::string>& candidates, const Vector& context) const;

  Response respond(const SimAgent& agent, const Conversation& conv, const Turn& turn,
                   const std::vector<std::string>& candidates, const Vector& context,
                   RandomStream& rng) const;

  double fidelity(const SimAgent& from, const SimAgent& to) const;
  ContextTransfer handoff(const SimAgent& from, const SimAgent& to, const Vector& context,
                          RandomStream& rng) const;

 private:
  const Grammar& grammar_;
  const TokenEmbedder& embedder_;
  ResponseConfig cfg_;
  Matrix keys_;  // prompt_dim x patterns
};

}  // namespace orchestra

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
#include <vector>

#include "orchestra/numerics/dense.hpp"
#include "orchestra/numerics/random.hpp"
#include "orchestra/state/types.hpp"

namespace orchestra {

struct StateDims {
  int prompt = 512;
  int context = 768;
  int cap_rows = 10;
  int cap_cols = 5;

  int flat_size() const { return prompt + context + cap_rows * cap_cols; }
  friend bool operator==(const StateDims&, const StateDims&) = default;
};

/// One agent's (prompt, context, capability) triple. Stored single precision.
struct AgentState {
  std::uint32_t agent_id = 0;
  VectorF prompt;
  VectorF context;
  MatrixF capability;

  StateDims dims() const {
    return {static_cast<int>(prompt.size()), static_cast<int>(context.size()),
            static_cast<int>(capability.rows()), static_cast<int>(capability.cols())};
  }

  /// [prompt; context; vec(capability)] in double.
  Vector flatten() const;
  static AgentState unflatten(std::uint32_t id, const Vector& flat, const StateDims& dims);

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

/// Deterministic archetype centres used to synthesize baseline prompt sets.
/// separation is the ratio of the kind-specific offset norm to the shared
/// component norm.
Vector archetype_center(SpecialistKind kind, int dim, std::uint64_t seed, double separation = 1.0);

/// per_kind baseline prompts scattered around every archetype centre.
std::vector<Vector> baseline_prompts(int dim, int per_kind, std::uint64_t seed,
                                     double separation = 1.0, double spread = 0.15);

struct InitOptions {
  int components = 8;
  double noise = 0.05;
  std::uint64_t archetype_seed = 0;
  double separation = 1.0;
};

/// Prompt = baseline mean + projection of (archetype centre - mean) onto the
/// top principal components, plus noise confined to those components.
/// Context starts at zero, capabilities at the uninformed prior 0.5.
AgentState init_agent_state(std::uint32_t id, SpecialistKind archetype,
                            const std::vector<Vector>& baselines, RandomStream& rng,
                            const StateDims& dims = {}, const InitOptions& opts = {});

struct GlobalState {
  Vector phi;
  std::vector<double> weights;
};

/// Phi = sum_i w_i x_i over already flattened component vectors.
GlobalState global_state(const std::vector<Vector>& flat_states, const std::vector<double>& weights);
GlobalState global_state(const std::vector<AgentState>& states, const std::vector<double>& weights);

/// M <- M - eta (M - o 1) diag(e). For a unit basis e only column tau blends
/// toward the outcome.
template <typename Scalar>
MatrixX<Scalar> update_capability(const MatrixX<Scalar>& m, double outcome,
                                  const Vector& task_indicator, double eta) {
  if (!(outcome >= 0.0 && outcome <= 1.0))
    throw ContractError("update_capability: outcome must lie in [0,1]");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ContractError("update_capability: eta must lie in [0,1]");
  if (task_indicator.size() != m.cols())
    throw ShapeError("update_capability: indicator length must equal capability columns");
  MatrixX<Scalar> out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double e = task_indicator(j);
    if (e == 0.0) continue;
    if (e < 0.0 || e > 1.0) throw ContractError("update_capability: indicator entries must be in [0,1]");
    const double k = eta * e;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      out(i, j) = static_cast<Scalar>((1.0 - k) * static_cast<double>(m(i, j)) + k * outcome);
  }
  return out;
}

Vector task_indicator(TaskType t, int cols);

struct ScoredOutcome {
  double success;
  int age;  // 0 is newest
};

/// Exponentially weighted mean with weight decay^age; 0.5 for no history.
double capability_score(std::span<const ScoredOutcome> history, double decay = 0.95);

/// V = 0.5 |phi - phi_star|^2.
double lyapunov(const Vector& phi, const Vector& phi_star);
inline double lyapunov(const GlobalState& phi, const GlobalState& phi_star) {
  return lyapunov(phi.phi, phi_star.phi);
}

}  // namespace orchestra

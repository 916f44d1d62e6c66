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

#include <functional>
#include <memory>
#include <vector>

#include "orchestra/numerics/mlp.hpp"
#include "orchestra/numerics/optim.hpp"
#include "orchestra/state/agent_state.hpp"
#include "orchestra/state/replay_buffer.hpp"

namespace orchestra {

/// Per-tick quantities shared by every sample recorded in that tick.
struct TransitionContext {
  Vector phi;
  Vector state_sum;
  int count = 0;
};

struct TransitionSample {
  Vector state;
  int action = 0;
  Vector next_state;
  double reward = 0.0;
  std::shared_ptr<const TransitionContext> context;

  /// Mean of the other agents' states at record time (zero if alone).
  Vector neighbor_mean() const;
};

/// r = r_task + lambda * r_coherence.
double combined_reward(double task_reward, double coherence_reward, double lambda = 0.5);

/// Network input [state; neighbour mean; phi].
Vector transition_input(const Vector& state, const Vector& neighbor_mean, const Vector& phi);

Vector mean_state(const std::vector<AgentState>& neighbors, int flat_size);

/// Clamps the capability block of a flattened state into [0,1].
void clamp_capabilities(Vector& flat, const StateDims& dims);

/// Next state predicted by net. Neighbours enter as their mean; the network
/// may carry one extra trailing output (the reward head), which is ignored.
AgentState transition(const AgentState& state, const std::vector<AgentState>& neighbors,
                      const GlobalState& phi, const Mlp<double>& net);

/// Gradient of the reward head with respect to the prompt block of the
/// state input.
Vector q_gradient(const Mlp<double>& net, const Vector& input, int prompt_dim);

struct RolloutOptions {
  int trajectories = 10;
  int horizon = 5;
  /// Per-step reward; defaults to the network's reward head.
  std::function<double(const Vector& state, int action, RandomStream& rng)> reward;
};

/// Mean per-step reward over seeded rollouts of the learned dynamics.
double estimate_reward(const Vector& state, int action, const Vector& neighbor_mean,
                       const Vector& phi, const StateDims& dims, const Mlp<double>& net,
                       RandomStream& rng, const RolloutOptions& opts = {});

struct LearnerConfig {
  int hidden1 = 256;
  int hidden2 = 128;
  int batch = 32;
  double clip = kDefaultGradientClip;
  AdamConfig adam;
};

/// Transition network plus its optimizer state and replay buffer. Trained on
/// squared error against observed next states and rewards.
class TransitionLearner {
 public:
  TransitionLearner(const StateDims& dims, const LearnerConfig& cfg, std::uint64_t seed);

  const Mlp<double>& net() const { return net_; }
  Mlp<double>& net() { return net_; }
  ReplayBuffer<TransitionSample>& buffer() { return buffer_; }
  const ReplayBuffer<TransitionSample>& buffer() const { return buffer_; }
  const StateDims& dims() const { return dims_; }

  /// One Adam step on a sampled minibatch. Returns the batch loss; a no-op
  /// returning 0 while the buffer is empty. gradient_scale multiplies the raw
  /// gradient before clipping (failure-injection hook).
  double train_step(RandomStream& rng, double gradient_scale = 1.0);

  double last_raw_grad_norm() const { return last_raw_norm_; }
  double last_applied_grad_norm() const { return last_applied_norm_; }
  long steps() const { return adam_.step; }

 private:
  StateDims dims_;
  LearnerConfig cfg_;
  Mlp<double> net_;
  AdamState<double> adam_;
  ReplayBuffer<TransitionSample> buffer_;
  double last_raw_norm_ = 0.0;
  double last_applied_norm_ = 0.0;
};

}  // namespace orchestra

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
#include "orchestra/state/transition.hpp"

#include <string>

namespace orchestra {

Vector TransitionSample::neighbor_mean() const {
  if (!context || context->count <= 1) return Vector::Zero(state.size());
  return (context->state_sum - state) / static_cast<double>(context->count - 1);
}

double combined_reward(double task_reward, double coherence_reward, double lambda) {
  if (!(lambda >= 0.0)) throw ContractError("combined_reward: lambda must be nonnegative");
  const double r = task_reward + lambda * coherence_reward;
  if (!std::isfinite(r)) throw ContractError("combined_reward: non-finite reward");
  return r;
}

Vector transition_input(const Vector& state, const Vector& neighbor_mean, const Vector& phi) {
  require_same_size(state, neighbor_mean, "transition_input");
  Vector x(state.size() + neighbor_mean.size() + phi.size());
  x << state, neighbor_mean, phi;
  return x;
}

Vector mean_state(const std::vector<AgentState>& neighbors, int flat_size) {
  Vector m = Vector::Zero(flat_size);
  if (neighbors.empty()) return m;
  for (const auto& n : neighbors) {
    Vector f = n.flatten();
    require_same_size(f, m, "mean_state");
    m += f;
  }
  return m / static_cast<double>(neighbors.size());
}

void clamp_capabilities(Vector& flat, const StateDims& d) {
  auto cap = flat.segment(d.prompt + d.context, d.cap_rows * d.cap_cols);
  cap = cap.cwiseMax(0.0).cwiseMin(1.0);
}

AgentState transition(const AgentState& state, const std::vector<AgentState>& neighbors,
                      const GlobalState& phi, const Mlp<double>& net) {
  const StateDims d = state.dims();
  const int n = d.flat_size();
  const Vector x = transition_input(state.flatten(), mean_state(neighbors, n), phi.phi);
  if (x.size() != net.input_dim())
    throw ShapeError("transition: network expects input " + std::to_string(net.input_dim()) +
                     ", got " + std::to_string(x.size()));
  if (net.output_dim() != n && net.output_dim() != n + 1)
    throw ShapeError("transition: network output does not match state size");
  Vector next = net.predict(x).head(n);
  clamp_capabilities(next, d);
  return AgentState::unflatten(state.agent_id, next, d);
}

Vector q_gradient(const Mlp<double>& net, const Vector& input, int prompt_dim) {
  Vector head = Vector::Zero(net.output_dim());
  head(net.output_dim() - 1) = 1.0;
  return net.input_gradient(input, head).head(prompt_dim);
}

double estimate_reward(const Vector& state, int action, const Vector& neighbor_mean,
                       const Vector& phi, const StateDims& dims, const Mlp<double>& net,
                       RandomStream& rng, const RolloutOptions& opts) {
  if (opts.trajectories < 1) throw ContractError("estimate_reward: need at least one trajectory");
  if (opts.horizon < 1) throw ContractError("estimate_reward: horizon must be positive");
  const int n = dims.flat_size();
  // Fresh rollouts per call: fork() ignores the position, so key the base
  // on a draw.
  const RandomStream base = rng.fork(rng.next_u64());
  double total = 0.0;
  for (int t = 0; t < opts.trajectories; ++t) {
    RandomStream traj = base.fork(static_cast<std::uint64_t>(t));
    Vector x = state;
    double acc = 0.0;
    for (int h = 0; h < opts.horizon; ++h) {
      const Vector out = net.predict(transition_input(x, neighbor_mean, phi));
      acc += opts.reward ? opts.reward(x, action, traj) : out(out.size() - 1);
      x = out.head(n);
      clamp_capabilities(x, dims);
    }
    total += acc / opts.horizon;
  }
  return total / opts.trajectories;
}

TransitionLearner::TransitionLearner(const StateDims& dims, const LearnerConfig& cfg,
                                     std::uint64_t seed)
    : dims_(dims), cfg_(cfg) {
  const int n = dims.flat_size();
  net_ = Mlp<double>::transition(3 * n, n + 1, cfg.hidden1, cfg.hidden2);
  RandomStream rng(seed, 0x4E7);
  net_.initialize(rng, 0.1);
  adam_ = AdamState<double>::for_network(net_);
}

double TransitionLearner::train_step(RandomStream& rng, double gradient_scale) {
  if (buffer_.empty()) return 0.0;
  const int n = dims_.flat_size();
  const auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch), rng);
  const auto b = static_cast<Eigen::Index>(batch.size());
  Matrix x(3 * n, b), target(n + 1, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const auto& s = *batch[static_cast<std::size_t>(k)];
    const Vector phi = s.context ? s.context->phi : Vector::Zero(n);
    x.col(k) = transition_input(s.state, s.neighbor_mean(), phi);
    target.col(k).head(n) = s.next_state;
    target(n, k) = s.reward;
  }
  ForwardCache<double> cache;
  const Matrix out = net_.forward(x, cache);
  Matrix diff = out - target;
  const double loss = (0.5 * diff.topRows(n).squaredNorm() / n + 0.5 * diff.row(n).squaredNorm()) /
                      static_cast<double>(b);
  diff.topRows(n) /= static_cast<double>(n);
  diff /= static_cast<double>(b);
  auto grads = net_.backward(cache, diff).grads;
  grads *= gradient_scale;
  last_raw_norm_ = grads.norm();
  grads = clip_gradient(std::move(grads), cfg_.clip);
  last_applied_norm_ = grads.norm();
  adam_step(net_, grads, adam_, cfg_.adam);
  return loss;
}

}  // namespace orchestra

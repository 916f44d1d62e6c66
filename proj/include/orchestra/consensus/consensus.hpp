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
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "orchestra/numerics/dense.hpp"

namespace orchestra {

struct ConsensusConfig {
  double alpha = 0.9;
  double beta_grad = 1e-3;
  double lambda_pen = 0.1;
  double beta_spatial = 1.0;
  double lambda_i = 0.01;
  int max_iters = 10;
  double tol = 1e-6;
  double delta_max_frac = 0.1;
  double e_min = 0.7;
  double grad_clip = 5.0;
};

/// Completion flags of the most recent conversations.
class EffectivenessWindow {
 public:
  explicit EffectivenessWindow(std::size_t capacity = 100) : capacity_(capacity) {}

  void push(bool completed);
  /// Mean over the window; 1.0 while empty.
  double value() const;
  std::size_t size() const { return flags_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<bool>& flags() const { return flags_; }
  void assign(std::deque<bool> flags);

  friend bool operator==(const EffectivenessWindow&, const EffectivenessWindow&) = default;

 private:
  std::size_t capacity_;
  std::deque<bool> flags_;
};

/// Shannon entropy (natural log). Throws ContractError unless p is a
/// probability vector.
double entropy(const Vector& p);

/// V = -|y - f|^2 + lambda_i H(p).
double value_function(const Vector& target, const Vector& fit, const Vector& p, double lambda_i);

/// Omega = |c - c_prev|^2 + beta_spatial sum_ij w_ij |c_i - c_j|^2.
double config_penalty(const std::vector<Vector>& c, const std::vector<Vector>& c_prev,
                      const Matrix& comm_weights, double beta_spatial);

/// w_j = E_j / sum_k E_k. All-zero input falls back to uniform weights and
/// sets *fell_back.
std::vector<double> adaptive_weights(std::span<const double> effectiveness,
                                     bool* fell_back = nullptr);

/// Row-stochastic neighbour weights for every agent: row i spreads over
/// j != i in proportion to effectiveness[j]. A lone agent gets a zero row.
Matrix adaptive_weight_matrix(std::span<const double> effectiveness);

/// Uniform neighbour weights (static-weight ablation).
Matrix uniform_weight_matrix(int n);

/// P_i + alpha sum_j w_ij (P_j - P_i) + beta clip(g_i).
std::vector<Vector> consensus_step(const std::vector<Vector>& prompts, const Matrix& weights,
                                   double alpha, const std::vector<Vector>& q_gradients,
                                   double beta_grad, double grad_clip = 5.0);

enum class ViolationKind : std::uint8_t { Delta, Effectiveness, Resource };
std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  double value;
  double bound;
};

struct ResourceUsage {
  double used = 0.0;
  double max = std::numeric_limits<double>::infinity();
};

std::vector<Violation> check_constraints(const std::vector<Vector>& c,
                                         const std::vector<Vector>& c_prev,
                                         const EffectivenessWindow& window,
                                         const ResourceUsage& resources,
                                         const ConsensusConfig& cfg = {});

struct ConsensusProblem {
  std::vector<Vector> prompts;  // snapshot configuration
  Matrix weights;               // adaptive weights, rows sum to 1 (or 0 if isolated)
  Matrix comm_weights;          // spatial-coherence weights; empty means none
  std::vector<Vector> q_gradients;  // empty means no gradient term
  /// Optional per-iteration multiplier on the gradient term.
  std::function<double(int iteration)> gradient_schedule;
  EffectivenessWindow window;
  ResourceUsage resources;
};

enum class ConsensusStatus : std::uint8_t { Converged, RolledBack };

struct ConsensusOutcome {
  ConsensusStatus status = ConsensusStatus::Converged;
  std::vector<Vector> configuration;
  int iterations = 0;
  std::vector<double> objective_trace;  // J before the first step, then after each step
  std::vector<Violation> violations;
  bool delta_projected = false;
  double max_applied_gradient = 0.0;
};

/// Objective minimized by a round: mean_i(-V_i) + lambda_pen * Omega / n,
/// evaluated on prompts scaled by 1/sqrt(dim).
double consensus_objective(const std::vector<Vector>& c, const std::vector<Vector>& snapshot,
                           const std::vector<Vector>& targets, const Matrix& comm_weights,
                           const ConsensusConfig& cfg);

/// Iterates consensus_step from the snapshot, keeping the round's total
/// movement inside the Delta ball, until the objective settles or the
/// iteration budget runs out (then the snapshot is returned unchanged).
ConsensusOutcome run_consensus(const ConsensusProblem& problem, const ConsensusConfig& cfg);

}  // namespace orchestra

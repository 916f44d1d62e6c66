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
#include "orchestra/consensus/consensus.hpp"

#include <cmath>
#include <string>

#include "orchestra/numerics/optim.hpp"

namespace orchestra {

void EffectivenessWindow::push(bool completed) {
  flags_.push_back(completed);
  while (flags_.size() > capacity_) flags_.pop_front();
}

double EffectivenessWindow::value() const {
  if (flags_.empty()) return 1.0;
  std::size_t k = 0;
  for (bool f : flags_) k += f ? 1 : 0;
  return static_cast<double>(k) / static_cast<double>(flags_.size());
}

void EffectivenessWindow::assign(std::deque<bool> flags) {
  flags_ = std::move(flags);
  while (flags_.size() > capacity_) flags_.pop_front();
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::Delta: return "delta";
    case ViolationKind::Effectiveness: return "effectiveness";
    case ViolationKind::Resource: return "resource";
  }
  return "unknown";
}

double entropy(const Vector& p) {
  double sum = 0.0, h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= 0.0) || !std::isfinite(p(i)))
      throw ContractError("entropy: probabilities must be finite and nonnegative");
    sum += p(i);
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  if (p.size() == 0 || std::abs(sum - 1.0) > 1e-9)
    throw ContractError("entropy: probabilities must sum to 1");
  return h;
}

double value_function(const Vector& target, const Vector& fit, const Vector& p, double lambda_i) {
  require_same_size(target, fit, "value_function");
  return -(target - fit).squaredNorm() + lambda_i * entropy(p);
}

namespace {

void require_config(const std::vector<Vector>& a, const std::vector<Vector>& b, const char* what) {
  if (a.size() != b.size()) throw ShapeError(std::string(what) + ": agent count mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) require_same_size(a[i], b[i], what);
}

double spatial_term(const std::vector<Vector>& c, const Matrix& w) {
  if (w.size() == 0) return 0.0;
  const auto n = static_cast<Eigen::Index>(c.size());
  if (w.rows() != n || w.cols() != n) throw ShapeError("config_penalty: weight matrix shape");
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (w(i, j) < 0.0) throw ContractError("config_penalty: negative communication weight");
      if (i != j && w(i, j) != 0.0)
        s += w(i, j) * (c[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(j)]).squaredNorm();
    }
  return s;
}

double config_norm(const std::vector<Vector>& c) {
  double s = 0.0;
  for (const auto& v : c) s += v.squaredNorm();
  return std::sqrt(s);
}

}  // namespace

double config_penalty(const std::vector<Vector>& c, const std::vector<Vector>& c_prev,
                      const Matrix& comm_weights, double beta_spatial) {
  require_config(c, c_prev, "config_penalty");
  double temporal = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) temporal += (c[i] - c_prev[i]).squaredNorm();
  return temporal + beta_spatial * spatial_term(c, comm_weights);
}

std::vector<double> adaptive_weights(std::span<const double> e, bool* fell_back) {
  if (e.empty()) throw ContractError("adaptive_weights: no neighbours");
  double sum = 0.0;
  for (double x : e) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ContractError("adaptive_weights: effectiveness must be finite and nonnegative");
    sum += x;
  }
  std::vector<double> w(e.size());
  if (fell_back) *fell_back = sum == 0.0;
  if (sum == 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(e.size()));
    return w;
  }
  for (std::size_t i = 0; i < e.size(); ++i) w[i] = e[i] / sum;
  return w;
}

Matrix adaptive_weight_matrix(std::span<const double> e) {
  const auto n = static_cast<Eigen::Index>(e.size());
  Matrix w = Matrix::Zero(n, n);
  if (n < 2) return w;
  std::vector<double> others(e.size() - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) others[k++] = e[static_cast<std::size_t>(j)];
    const auto row = adaptive_weights(others);
    k = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) w(i, j) = row[k++];
  }
  return w;
}

Matrix uniform_weight_matrix(int n) {
  Matrix w = Matrix::Zero(n, n);
  if (n < 2) return w;
  w.setConstant(1.0 / (n - 1));
  w.diagonal().setZero();
  return w;
}

std::vector<Vector> consensus_step(const std::vector<Vector>& prompts, const Matrix& weights,
                                   double alpha, const std::vector<Vector>& q_gradients,
                                   double beta_grad, double grad_clip) {
  const auto n = static_cast<Eigen::Index>(prompts.size());
  if (weights.rows() != n || weights.cols() != n)
    throw ShapeError("consensus_step: weight matrix must be n x n");
  if (!q_gradients.empty() && q_gradients.size() != prompts.size())
    throw ShapeError("consensus_step: one gradient per agent required");
  std::vector<Vector> out(prompts.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pi = prompts[static_cast<std::size_t>(i)];
    Vector pull = Vector::Zero(pi.size());
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = weights(i, j);
      if (j == i || w == 0.0) continue;
      const auto& pj = prompts[static_cast<std::size_t>(j)];
      require_same_size(pi, pj, "consensus_step");
      pull += w * (pj - pi);
    }
    Vector next = pi + alpha * pull;
    if (!q_gradients.empty() && beta_grad != 0.0) {
      const auto& g = q_gradients[static_cast<std::size_t>(i)];
      require_same_size(g, pi, "consensus_step");
      next += beta_grad * clip_norm(g, grad_clip);
    }
    out[static_cast<std::size_t>(i)] = std::move(next);
  }
  return out;
}

std::vector<Violation> check_constraints(const std::vector<Vector>& c,
                                         const std::vector<Vector>& c_prev,
                                         const EffectivenessWindow& window,
                                         const ResourceUsage& resources,
                                         const ConsensusConfig& cfg) {
  require_config(c, c_prev, "check_constraints");
  std::vector<Violation> out;
  double d2 = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) d2 += (c[i] - c_prev[i]).squaredNorm();
  const double d = std::sqrt(d2);
  const double bound = cfg.delta_max_frac * config_norm(c_prev);
  if (d > bound * (1.0 + 1e-12)) out.push_back({ViolationKind::Delta, d, bound});
  const double e = window.value();
  if (e < cfg.e_min) out.push_back({ViolationKind::Effectiveness, e, cfg.e_min});
  if (resources.used > resources.max)
    out.push_back({ViolationKind::Resource, resources.used, resources.max});
  return out;
}

double consensus_objective(const std::vector<Vector>& c, const std::vector<Vector>& snapshot,
                           const std::vector<Vector>& targets, const Matrix& comm_weights,
                           const ConsensusConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(c.size());
  if (n == 0) return 0.0;
  const double dim = static_cast<double>(c.front().size());
  const double s2 = 1.0 / dim;  // squared scale of c / sqrt(dim)

  Matrix x(c.front().size(), n);
  for (Eigen::Index i = 0; i < n; ++i) x.col(i) = c[static_cast<std::size_t>(i)];
  const Matrix gram = x.transpose() * x;

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    double v = -s2 * (targets[k] - c[k]).squaredNorm();
    if (n > 1 && cfg.lambda_i != 0.0) {
      // p_i: soft neighbour assignment by scaled squared distance.
      Vector logits(n - 1);
      Eigen::Index m = 0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) logits(m++) = -s2 * (gram(i, i) + gram(j, j) - 2.0 * gram(i, j));
      const double mx = logits.maxCoeff();
      Vector p = (logits.array() - mx).exp();
      p /= p.sum();
      v += cfg.lambda_i * entropy(p);
    }
    loss -= v;
  }
  const double omega = s2 * config_penalty(c, snapshot, comm_weights, cfg.beta_spatial);
  return loss / static_cast<double>(n) + cfg.lambda_pen * omega / static_cast<double>(n);
}

ConsensusOutcome run_consensus(const ConsensusProblem& pb, const ConsensusConfig& cfg) {
  if (!(cfg.alpha > 0.0)) throw ContractError("run_consensus: alpha must be positive");
  if (cfg.max_iters < 1) throw ContractError("run_consensus: max_iters must be at least 1");
  const auto& snap = pb.prompts;
  const auto n = static_cast<Eigen::Index>(snap.size());
  if (pb.weights.rows() != n || pb.weights.cols() != n)
    throw ShapeError("run_consensus: weight matrix must be n x n");

  ConsensusOutcome out;
  std::vector<Vector> targets(snap.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector y = Vector::Zero(snap[static_cast<std::size_t>(i)].size());
    double rs = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && pb.weights(i, j) != 0.0) {
        y += pb.weights(i, j) * snap[static_cast<std::size_t>(j)];
        rs += pb.weights(i, j);
      }
    targets[static_cast<std::size_t>(i)] = rs > 0.0 ? y : snap[static_cast<std::size_t>(i)];
  }

  std::vector<Vector> grads;
  if (!pb.q_gradients.empty()) {
    for (const auto& g : pb.q_gradients) grads.push_back(clip_norm(g, cfg.grad_clip));
  }
  const double bound = cfg.delta_max_frac * config_norm(snap);

  std::vector<Vector> c = snap;
  double prev = consensus_objective(c, snap, targets, pb.comm_weights, cfg);
  out.objective_trace.push_back(prev);
  bool converged = false;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const double mult = pb.gradient_schedule ? pb.gradient_schedule(k) : 1.0;
    std::vector<Vector> scaled;
    if (!grads.empty()) {
      scaled = grads;
      for (auto& g : scaled) g *= mult;
      for (const auto& g : scaled) out.max_applied_gradient = std::max(out.max_applied_gradient, g.norm());
    }
    // Gradients are already clipped; scaling by the schedule is the fixture's job.
    c = consensus_step(c, pb.weights, cfg.alpha, scaled, cfg.beta_grad,
                       std::numeric_limits<double>::infinity());

    double d2 = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) d2 += (c[i] - snap[i]).squaredNorm();
    const double d = std::sqrt(d2);
    if (d > bound) {
      const double s = bound / d;
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = snap[i] + s * (c[i] - snap[i]);
      out.delta_projected = true;
    }

    const double j = consensus_objective(c, snap, targets, pb.comm_weights, cfg);
    out.objective_trace.push_back(j);
    out.iterations = k;
    if (std::isfinite(j) && std::abs(j - prev) < cfg.tol) {
      converged = true;
      break;
    }
    prev = j;
  }

  if (converged) {
    out.status = ConsensusStatus::Converged;
    out.violations = check_constraints(c, snap, pb.window, pb.resources, cfg);
    out.configuration = std::move(c);
  } else {
    out.status = ConsensusStatus::RolledBack;
    out.configuration = snap;
  }
  return out;
}

}  // namespace orchestra

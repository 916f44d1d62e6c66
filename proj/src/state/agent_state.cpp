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
#include "orchestra/state/agent_state.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

namespace orchestra {

std::string_view to_string(SpecialistKind k) {
  switch (k) {
    case SpecialistKind::Grammar: return "grammar";
    case SpecialistKind::Knowledge: return "knowledge";
    case SpecialistKind::Reasoning: return "reasoning";
    case SpecialistKind::Generalist: return "generalist";
  }
  return "unknown";
}

std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::InformationRetrieval: return "information_retrieval";
    case TaskType::ProblemSolving: return "problem_solving";
    case TaskType::Creative: return "creative";
  }
  return "unknown";
}

std::optional<SpecialistKind> parse_kind(std::string_view s) {
  for (auto k : kAllKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<TaskType> parse_task_type(std::string_view s) {
  for (auto t : kAllTaskTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

Vector AgentState::flatten() const {
  Vector out(prompt.size() + context.size() + capability.size());
  out << prompt.cast<double>(), context.cast<double>(), orchestra::flatten(capability).cast<double>();
  return out;
}

AgentState AgentState::unflatten(std::uint32_t id, const Vector& flat, const StateDims& d) {
  if (flat.size() != d.flat_size())
    throw ShapeError("AgentState::unflatten: expected " + std::to_string(d.flat_size()) +
                     " entries, got " + std::to_string(flat.size()));
  AgentState s;
  s.agent_id = id;
  s.prompt = flat.segment(0, d.prompt).cast<float>();
  s.context = flat.segment(d.prompt, d.context).cast<float>();
  s.capability = Eigen::Map<const Matrix>(flat.data() + d.prompt + d.context, d.cap_rows, d.cap_cols)
                     .cast<float>();
  return s;
}

Vector archetype_center(SpecialistKind kind, int dim, std::uint64_t seed, double separation) {
  RandomStream shared(seed, 0xA0);
  RandomStream own(seed, 0xA1 + static_cast<std::uint64_t>(kind));
  Vector c = shared.normal_vector(dim);
  Vector o = own.normal_vector(dim);
  // Each entry has unit variance overall, so |centre| ~ sqrt(dim).
  const double norm = 1.0 / std::sqrt(1.0 + separation * separation);
  return norm * (c + separation * o);
}

std::vector<Vector> baseline_prompts(int dim, int per_kind, std::uint64_t seed, double separation,
                                     double spread) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(per_kind) * kAllKinds.size());
  for (auto kind : kAllKinds) {
    const Vector centre = archetype_center(kind, dim, seed, separation);
    RandomStream rng(seed, 0xB0 + static_cast<std::uint64_t>(kind));
    for (int k = 0; k < per_kind; ++k) out.push_back(centre + spread * rng.normal_vector(dim));
  }
  return out;
}

AgentState init_agent_state(std::uint32_t id, SpecialistKind archetype,
                            const std::vector<Vector>& baselines, RandomStream& rng,
                            const StateDims& dims, const InitOptions& opts) {
  if (baselines.empty()) throw ConfigError("init_agent_state: baseline prompt set is empty");
  if (baselines.size() < 2)
    throw ConfigError("init_agent_state: need at least two baseline prompts");
  const Eigen::Index p = baselines.front().size();
  if (p != dims.prompt) throw ShapeError("init_agent_state: baseline dimension differs from prompt dim");

  Matrix x(static_cast<Eigen::Index>(baselines.size()), p);
  for (std::size_t i = 0; i < baselines.size(); ++i) {
    if (baselines[i].size() != p) throw ShapeError("init_agent_state: ragged baseline set");
    x.row(static_cast<Eigen::Index>(i)) = baselines[i].transpose();
  }
  const Vector mean = x.colwise().mean().transpose();
  const Matrix centred = x.rowwise() - mean.transpose();

  Eigen::JacobiSVD<Matrix> svd(centred, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  // Relative to the data as well, so identical baselines (whose centred
  // rows are pure roundoff) give no components.
  const double tol = std::max((sv.size() > 0 ? sv(0) : 0.0) * 1e-10, x.norm() * 1e-12) + 1e-300;
  int q = 0;
  while (q < std::min<Eigen::Index>(opts.components, sv.size()) && sv(q) > tol) ++q;

  Vector prompt = mean;
  if (q > 0) {
    const Matrix u = svd.matrixV().leftCols(q);
    const Vector target = archetype_center(archetype, static_cast<int>(p), opts.archetype_seed,
                                           opts.separation);
    prompt += u * (u.transpose() * (target - mean));
    const double n = static_cast<double>(baselines.size());
    Vector z(q);
    for (int k = 0; k < q; ++k) z(k) = rng.normal() * sv(k) / std::sqrt(std::max(1.0, n - 1.0));
    prompt += opts.noise * (u * z);
  }

  AgentState s;
  s.agent_id = id;
  s.prompt = prompt.cast<float>();
  s.context = VectorF::Zero(dims.context);
  s.capability = MatrixF::Constant(dims.cap_rows, dims.cap_cols, 0.5f);
  return s;
}

GlobalState global_state(const std::vector<Vector>& flat, const std::vector<double>& w) {
  if (flat.empty()) throw ContractError("global_state: no states");
  if (flat.size() != w.size()) throw ShapeError("global_state: one weight per state required");
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0 && x <= 1.0)) throw ContractError("global_state: weights must lie in [0,1]");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ContractError("global_state: weights must sum to 1");
  GlobalState g;
  g.phi = Vector::Zero(flat.front().size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    require_same_size(flat[i], g.phi, "global_state");
    g.phi += w[i] * flat[i];
  }
  g.weights = w;
  return g;
}

GlobalState global_state(const std::vector<AgentState>& states, const std::vector<double>& w) {
  std::vector<Vector> flat;
  flat.reserve(states.size());
  for (const auto& s : states) flat.push_back(s.flatten());
  return global_state(flat, w);
}

Vector task_indicator(TaskType t, int cols) {
  if (task_column(t) >= cols) throw ShapeError("task_indicator: capability matrix too narrow");
  Vector e = Vector::Zero(cols);
  e(task_column(t)) = 1.0;
  return e;
}

double capability_score(std::span<const ScoredOutcome> history, double decay) {
  if (!(decay > 0.0 && decay < 1.0)) throw ContractError("capability_score: decay must be in (0,1)");
  if (history.empty()) return 0.5;
  double num = 0.0, den = 0.0;
  for (const auto& h : history) {
    if (h.age < 0) throw ContractError("capability_score: negative age");
    const double w = std::pow(decay, h.age);
    num += w * h.success;
    den += w;
  }
  return num / den;
}

double lyapunov(const Vector& phi, const Vector& phi_star) {
  require_same_size(phi, phi_star, "lyapunov");
  return 0.5 * (phi - phi_star).squaredNorm();
}

}  // namespace orchestra

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
#include "orchestra/agents/sim_agent.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace orchestra {

namespace {
constexpr const char* kResponseSymbol = "RESPONSE";
constexpr const char* kContentSlot = "<content>";
}  // namespace

Aptitude draw_aptitude(SpecialistKind kind, RandomStream& rng) {
  Aptitude a;
  if (kind == SpecialistKind::Generalist) {
    for (auto& t : a.task) t = rng.uniform(0.75, 0.85);
    a.trigger_match = rng.uniform(0.75, 0.85);
  } else {
    for (auto& t : a.task) t = rng.uniform(0.6, 0.8);
    a.trigger_match = rng.uniform(0.95, 0.98);
  }
  return a;
}

double SimAgent::alignment(const Turn& turn, TaskType task) const {
  if (turn.trigger) {
    if (*turn.trigger == kind) return aptitude.trigger_match;
    // A triggered turn served by the wrong kind is handled below par.
    return 0.8 * aptitude.task[static_cast<std::size_t>(task)];
  }
  return aptitude.task[static_cast<std::size_t>(task)];
}

Vector context_drift(const Vector& context, double f, RandomStream& rng) {
  if (!(f >= 0.0 && f <= 1.0)) throw ContractError("context_drift: fidelity must lie in [0,1]");
  if (f == 1.0) return context;
  const double norm = context.norm();
  if (norm == 0.0) return context;
  Vector noise = rng.normal_vector(context.size());
  noise *= norm / noise.norm();
  Vector out = f * context + (1.0 - f) * noise;
  const double n = out.norm();
  if (n > 0.0) out *= norm / n;
  return out;
}

ResponseModel::ResponseModel(const Grammar& grammar, const TokenEmbedder& embedder, int prompt_dim,
                             ResponseConfig cfg)
    : grammar_(grammar), embedder_(embedder), cfg_(cfg) {
  const auto n = static_cast<Eigen::Index>(grammar.alternatives(kResponseSymbol).size());
  keys_.resize(prompt_dim, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    RandomStream r(cfg.pattern_seed, 0x100 + static_cast<std::uint64_t>(k));
    Vector v = r.normal_vector(prompt_dim);
    keys_.col(k) = v / v.norm();
  }
}

double ResponseModel::inclusion_probability(double a, double rho) const {
  if (a >= 1.0) return rho;
  return rho / (1.0 + std::exp(-cfg_.kappa * (a - 0.5)));
}

std::size_t ResponseModel::choose_pattern(const VectorF& prompt) const {
  if (prompt.size() != keys_.rows()) throw ShapeError("choose_pattern: prompt dimension");
  const Vector scores = keys_.transpose() * prompt.cast<double>();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k)
    if (scores(k) > scores(best)) best = k;
  return static_cast<std::size_t>(best);
}

std::vector<std::string> ResponseModel::pattern_tokens(std::size_t pattern, std::uint64_t seed) const {
  RandomStream r(mix64(seed ^ 0x7e57), 0x200 + pattern);
  return expand_alternative(grammar_, kResponseSymbol, pattern, r, cfg_.max_depth).tokens;
}

std::vector<std::string> ResponseModel::recall(const Vector& context,
                                               const std::vector<std::string>& candidates) const {
  std::vector<std::pair<double, const std::string*>> scored;
  std::unordered_set<std::string_view> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c).second) continue;
    scored.emplace_back(context.dot(embedder_.embed(c)), &c);
  }
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(cfg_.recall_tokens), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(k), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return *a.second < *b.second;
                    });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(*scored[i].second);
  return out;
}

namespace {

std::vector<std::string> fill(const std::vector<std::string>& pattern,
                              const std::vector<std::string>& content) {
  std::vector<std::string> out;
  out.reserve(pattern.size() + content.size());
  for (const auto& t : pattern) {
    if (t == kContentSlot) out.insert(out.end(), content.begin(), content.end());
    else out.push_back(t);
  }
  return out;
}

}  // namespace

std::vector<std::string> ResponseModel::echo(const VectorF& prompt, std::uint64_t seed,
                                             const std::vector<std::string>& candidates,
                                             const Vector& context) const {
  return fill(pattern_tokens(choose_pattern(prompt), seed), recall(context, candidates));
}

Response ResponseModel::respond(const SimAgent& agent, const Conversation& conv, const Turn& turn,
                                const std::vector<std::string>& candidates, const Vector& context,
                                RandomStream& rng) const {
  Response r;
  r.alignment = agent.alignment(turn, conv.task);
  const double p = inclusion_probability(r.alignment, agent.rho);
  for (const auto& t : conv.answer_key)
    if (p >= 1.0 || rng.bernoulli(p)) r.included.push_back(t);
  r.pattern = choose_pattern(agent.state.prompt);
  r.recalled = recall(context, candidates);
  std::vector<std::string> content = r.recalled;
  content.insert(content.end(), r.included.begin(), r.included.end());
  r.tokens = fill(pattern_tokens(r.pattern, conv.seed), content);
  return r;
}

double ResponseModel::fidelity(const SimAgent& from, const SimAgent& to) const {
  double sim = std::max(0.0, cosine(from.state.capability, to.state.capability));
  if (cfg_.prompt_compatibility) sim *= std::max(0.0, cosine(from.state.prompt, to.state.prompt));
  if (sim > 1.0 - 1e-12) return 1.0;  // identical operands up to rounding
  return std::clamp(cfg_.fidelity_floor + (1.0 - cfg_.fidelity_floor) * sim, 0.0, 1.0);
}

ContextTransfer ResponseModel::handoff(const SimAgent& from, const SimAgent& to,
                                       const Vector& context, RandomStream& rng) const {
  ContextTransfer t;
  t.source = from.id();
  t.target = to.id();
  if (from.id() == to.id()) {
    t.context = context;
    return t;
  }
  if (!from.live || !to.live) throw StateError("handoff: both agents must be live");
  t.fidelity = fidelity(from, to);
  t.context = context_drift(context, t.fidelity, rng);
  return t;
}

}  // namespace orchestra

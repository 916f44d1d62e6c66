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
#include "orchestra/convgen/generator.hpp"

#include <algorithm>
#include <set>

#include "orchestra/error.hpp"

namespace orchestra {

std::string_view to_string(FsmState s) {
  switch (s) {
    case FsmState::Greeting: return "greeting";
    case FsmState::QueryFormulation: return "query_formulation";
    case FsmState::InformationExchange: return "information_exchange";
    case FsmState::Clarification: return "clarification";
    case FsmState::Conclusion: return "conclusion";
  }
  return "unknown";
}

std::optional<FsmState> parse_fsm_state(std::string_view s) {
  for (int i = 0; i < kFsmStates; ++i)
    if (to_string(static_cast<FsmState>(i)) == s) return static_cast<FsmState>(i);
  return std::nullopt;
}

Matrix marginal_matching_transitions() {
  Matrix t(kFsmStates, kFsmStates);
  // clang-format off
  t << 0.0, 1.0,   0.0,   0.0,   0.0,
       0.0, 0.0,   0.75,  0.25,  0.0,
       0.0, 0.125, 0.375, 0.375, 0.125,
       0.0, 0.25,  0.5,   0.0,   0.25,
       0.0, 0.0,   0.0,   0.0,   1.0;
  // clang-format on
  return t;
}

Matrix direct_transitions(const std::array<double, kFsmStates>& m) {
  Matrix t(kFsmStates, kFsmStates);
  for (int i = 0; i < kFsmStates; ++i)
    for (int j = 0; j < kFsmStates; ++j) t(i, j) = m[static_cast<std::size_t>(j)];
  t.row(kFsmStates - 1).setZero();
  t(kFsmStates - 1, kFsmStates - 1) = 1.0;
  return t;
}

Matrix without_state(const Matrix& transitions, FsmState s) {
  Matrix t = transitions;
  const int k = static_cast<int>(s);
  t.col(k).setZero();
  for (int i = 0; i < t.rows(); ++i) {
    const double r = t.row(i).sum();
    if (r > 0.0) t.row(i) /= r;
  }
  return t;
}

std::array<double, kFsmStates> expected_visit_shares(const Matrix& t) {
  // Visits of transient states: v = e_0 (I - T_tt)^-1; Conclusion is then
  // reached once per conversation.
  const int n = kFsmStates - 1;
  const Matrix tt = t.topLeftCorner(n, n);
  Eigen::RowVectorXd start = Eigen::RowVectorXd::Zero(n);
  start(0) = 1.0;
  const Eigen::RowVectorXd v = (Matrix::Identity(n, n) - tt).transpose().fullPivLu()
                                   .solve(start.transpose()).transpose();
  std::array<double, kFsmStates> out{};
  double total = 1.0;
  for (int i = 0; i < n; ++i) total += v(i);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = v(i) / total;
  out[kFsmStates - 1] = 1.0 / total;
  return out;
}

namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

int clamp_flag(int v, int lo, int hi, bool& flag) {
  if (v < lo) { flag = true; return lo; }
  if (v > hi) { flag = true; return hi; }
  return v;
}

}  // namespace

ComplexityProfile raw_complexity(const Derivation& d) {
  ComplexityProfile p;
  p.parse_depth = d.depth();
  p.entities = p.relations = p.inference_steps = 0;
  for (const auto& n : d.nodes) {
    if (n.terminal) {
      if (n.parent < 0) continue;
      const auto& parent = d.nodes[static_cast<std::size_t>(n.parent)].symbol;
      if (starts_with(parent, "ENTITY")) ++p.entities;
      else if (starts_with(parent, "RELATION")) ++p.relations;
    } else if (starts_with(n.symbol, "INFER")) {
      ++p.inference_steps;
    }
  }
  return p;
}

ComplexityProfile clamp_profile(ComplexityProfile p, const ComplexityRanges& r) {
  bool f = p.clamped;
  p.parse_depth = clamp_flag(p.parse_depth, r.depth_lo, r.depth_hi, f);
  p.entities = clamp_flag(p.entities, r.entities_lo, r.entities_hi, f);
  p.relations = clamp_flag(p.relations, r.relations_lo, r.relations_hi, f);
  p.inference_steps = clamp_flag(p.inference_steps, r.inference_lo, r.inference_hi, f);
  p.clamped = f;
  return p;
}

ComplexityProfile complexity_annotation(const Derivation& d, const ComplexityRanges& r) {
  return clamp_profile(raw_complexity(d), r);
}

std::optional<SpecialistKind> trigger_check(const ComplexityProfile& p, const TriggerThresholds& t) {
  if (p.parse_depth > t.depth) return SpecialistKind::Grammar;
  if (p.entities > t.entities) return SpecialistKind::Knowledge;
  if (p.inference_steps > t.inference) return SpecialistKind::Reasoning;
  return std::nullopt;
}

TaskType sample_task_type(RandomStream& rng, const std::array<double, 3>& mix) {
  return static_cast<TaskType>(rng.categorical(mix));
}

std::string start_symbol(FsmState s, TaskType task) {
  switch (s) {
    case FsmState::Greeting: return "GREETING";
    case FsmState::QueryFormulation:
      switch (task) {
        case TaskType::InformationRetrieval: return "QUERY_IR";
        case TaskType::ProblemSolving: return "QUERY_PS";
        case TaskType::Creative: return "QUERY_CR";
      }
      break;
    case FsmState::InformationExchange: return "EXCHANGE";
    case FsmState::Clarification: return "CLARIFY";
    case FsmState::Conclusion: return "CONCLUDE";
  }
  throw GenerationError("start_symbol: unknown state");
}

namespace {

std::string trigger_symbol(SpecialistKind k) {
  switch (k) {
    case SpecialistKind::Grammar: return "TRIGGER_GRAMMAR";
    case SpecialistKind::Knowledge: return "TRIGGER_KNOWLEDGE";
    case SpecialistKind::Reasoning: return "TRIGGER_REASONING";
    case SpecialistKind::Generalist: break;
  }
  throw GenerationError("no trigger phrase for generalists");
}

std::vector<std::string> entity_terminals(const Derivation& d) {
  std::vector<std::string> out;
  for (const auto& n : d.nodes)
    if (n.terminal && n.parent >= 0 &&
        starts_with(d.nodes[static_cast<std::size_t>(n.parent)].symbol, "ENTITY"))
      out.push_back(n.symbol);
  return out;
}

/// Last terminal under the last inference-marker node, if any.
std::optional<std::string> inference_terminal(const Derivation& d) {
  std::optional<std::string> out;
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    if (d.nodes[i].terminal || !starts_with(d.nodes[i].symbol, "INFER")) continue;
    // Walk to the rightmost leaf of this subtree.
    const ParseNode* n = &d.nodes[i];
    while (!n->terminal && !n->children.empty()) n = &d.nodes[static_cast<std::size_t>(n->children.back())];
    if (n->terminal) out = n->symbol;
  }
  return out;
}

void append_distinct(std::vector<std::string>& key, const std::vector<std::string>& from,
                     std::size_t limit) {
  for (const auto& t : from) {
    if (key.size() >= limit) return;
    if (std::find(key.begin(), key.end(), t) == key.end()) key.push_back(t);
  }
}

}  // namespace

Conversation generate_conversation(std::uint64_t seed, const GeneratorConfig& cfg) {
  const Grammar& g = cfg.rules();
  if (cfg.transitions.rows() != kFsmStates || cfg.transitions.cols() != kFsmStates)
    throw GenerationError("generate_conversation: transition matrix must be 5 x 5");
  RandomStream rng(seed, 0xC0);
  Conversation c;
  c.seed = seed;
  c.task = sample_task_type(rng, cfg.task_mix);

  std::vector<std::string> query_entities, all_entities;
  std::optional<std::string> chain_end;

  FsmState state = FsmState::Greeting;
  for (int step = 0;; ++step) {
    if (step >= cfg.max_steps)
      throw GenerationError("generate_conversation: no Conclusion within " +
                            std::to_string(cfg.max_steps) + " steps (seed " + std::to_string(seed) + ")");
    Turn t;
    t.state = state;
    const Derivation d = expand_grammar(g, start_symbol(state, c.task), rng, cfg.max_depth);
    t.tokens = d.tokens;
    t.profile = clamp_profile(raw_complexity(d), cfg.ranges);
    t.trigger = trigger_check(t.profile, cfg.thresholds);
    if (t.trigger) t.trigger_phrase = expand_grammar(g, trigger_symbol(*t.trigger), rng, cfg.max_depth).tokens;

    const auto ents = entity_terminals(d);
    if (state == FsmState::QueryFormulation && query_entities.empty()) query_entities = ents;
    all_entities.insert(all_entities.end(), ents.begin(), ents.end());
    if (auto e = inference_terminal(d)) chain_end = e;

    c.turns.push_back(std::move(t));
    if (state == FsmState::Conclusion) break;

    const auto row = cfg.transitions.row(static_cast<int>(state));
    std::array<double, kFsmStates> w{};
    for (int j = 0; j < kFsmStates; ++j) w[static_cast<std::size_t>(j)] = row(j);
    state = static_cast<FsmState>(rng.categorical(w));
  }

  switch (c.task) {
    case TaskType::InformationRetrieval:
      append_distinct(c.answer_key, query_entities, 5);
      break;
    case TaskType::ProblemSolving:
      if (chain_end) c.answer_key.push_back(*chain_end);
      break;
    case TaskType::Creative:
      append_distinct(c.answer_key, query_entities, 3);
      break;
  }
  // Fallbacks: any entity, then any query token.
  if (c.answer_key.empty()) append_distinct(c.answer_key, all_entities, 1);
  if (c.answer_key.empty()) {
    for (const auto& t : c.turns)
      if (t.state == FsmState::QueryFormulation) append_distinct(c.answer_key, t.tokens, 1);
  }
  if (c.answer_key.empty()) append_distinct(c.answer_key, c.turns.front().tokens, 1);
  return c;
}

std::vector<Conversation> generate_corpus(std::size_t n, std::uint64_t base_seed,
                                          const GeneratorConfig& cfg) {
  if (n < 1) throw ContractError("generate_corpus: n must be at least 1");
  std::vector<Conversation> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_conversation(base_seed + i, cfg));
  return out;
}

std::array<double, kFsmStates> CorpusStats::visit_shares() const {
  std::array<double, kFsmStates> s{};
  for (int i = 0; i < kFsmStates; ++i)
    s[static_cast<std::size_t>(i)] = turns ? static_cast<double>(visits[static_cast<std::size_t>(i)]) / turns : 0.0;
  return s;
}

std::array<double, 3> CorpusStats::task_shares() const {
  std::array<double, 3> s{};
  for (int i = 0; i < 3; ++i)
    s[static_cast<std::size_t>(i)] =
        conversations ? static_cast<double>(tasks[static_cast<std::size_t>(i)]) / conversations : 0.0;
  return s;
}

CorpusStats corpus_statistics(const std::vector<Conversation>& corpus) {
  CorpusStats s;
  for (const auto& c : corpus) {
    ++s.conversations;
    ++s.tasks[static_cast<std::size_t>(c.task)];
    for (const auto& t : c.turns) {
      ++s.turns;
      ++s.visits[static_cast<std::size_t>(t.state)];
      if (t.trigger) ++s.triggers[static_cast<std::size_t>(*t.trigger)];
      if (t.profile.clamped) ++s.clamped_profiles;
    }
  }
  return s;
}

}  // namespace orchestra

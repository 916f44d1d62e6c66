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

#include "orchestra/orchestrator/orchestrator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <exception>
#include <filesystem>
#include <thread>

#include "orchestra/error.hpp"
#include "orchestra/metrics/embedding.hpp"
#include "orchestra/metrics/stats.hpp"
#include "orchestra/persistence/checkpoint.hpp"

namespace orchestra {

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::AgentCrash: return "agent_crash";
    case FailureKind::ConsensusDeadlock: return "consensus_deadlock";
    case FailureKind::GradientBlowup: return "gradient_blowup";
  }
  return "?";
}

std::string ConversationRecord::failure_category() const {
  const bool broke = min_adjacent_cosine < kContextBreakCosine;
  if (task_success) return "success";
  if (!answer_complete && broke) return "missing_answer+context_break";
  if (!answer_complete) return "missing_answer";
  return "context_break";
}

namespace {

/// Runs f(0..n-1), striped over worker threads when parallel. The bodies
/// touch disjoint data, so the result does not depend on the schedule.
template <typename F>
void for_each_index(std::size_t n, bool parallel, int threads, F&& f) {
  const std::size_t workers = parallel ? std::min<std::size_t>(static_cast<std::size_t>(threads), n) : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

constexpr SpecialistKind next_kind(SpecialistKind k) {
  return kAllKinds[(static_cast<std::size_t>(k) + 1) % std::size(kAllKinds)];
}

std::size_t tokens_bytes(const std::vector<std::string>& t) {
  std::size_t b = t.capacity() * sizeof(std::string);
  for (const auto& s : t) b += s.capacity() > 15 ? s.capacity() + 1 : 0;
  return b;
}

std::shared_ptr<const Grammar> resolve_grammar(std::shared_ptr<const Grammar> g, const std::string& path) {
  if (g) return g;
  if (!path.empty()) return std::make_shared<const Grammar>(Grammar::load(path));
  return std::shared_ptr<const Grammar>(&Grammar::builtin(), [](const Grammar*) {});
}

}  // namespace

struct Orchestrator::Active {
  Conversation conv;
  ContextWindow window;
  std::size_t next = 0;
  std::optional<std::uint32_t> owner;  // agent holding the context
  std::optional<std::uint32_t> last_responder;
  bool queued = false;
  std::uint64_t ready_tick = 0;
  std::vector<std::string> candidates;
  std::vector<Tokens> responses;
  std::vector<double> transition_rouge;
  std::vector<double> transition_cosine;
  ConversationRecord rec;

  Active(Conversation c, int dim, int capacity) : conv(std::move(c)), window(dim, capacity) {}
  bool finished() const { return next >= conv.turns.size(); }
};

struct Orchestrator::Work {
  struct Item {
    Active* conv = nullptr;
    Response response;
    double outcome = 0.0;
    double coherence = 1.0;
    bool handoff = false;
    std::uint32_t from = 0;
    double processing_ms = 0.0;
  };
  ContextWindow window;  // turns this agent served most recently
  Vector before;         // flattened state before serving
  Vector gradient;       // consensus-round scratch
  std::vector<Item> items;

  Work(int dim, int capacity) : window(dim, capacity) {}
};

Orchestrator::Orchestrator(const SimulationConfig& cfg, std::shared_ptr<const Grammar> grammar)
    : cfg_(cfg), grammar_(resolve_grammar(std::move(grammar), cfg.grammar_path)) {
  if (auto errs = cfg_.validate(); !errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  const StateDims& d = cfg_.dims;
  embedder_ = std::make_unique<TokenEmbedder>(d.context, cfg_.embed_seed);
  model_ = std::make_unique<ResponseModel>(*grammar_, *embedder_, d.prompt, cfg_.response);
  learner_ = std::make_unique<TransitionLearner>(d, cfg_.learner, mix64(cfg_.seed ^ 0x1ea4));

  sys_.dims = d;
  sys_.routing = RoutingTable(cfg_.routing);
  sys_.rng = RandomStream(cfg_.seed, 0x5157);
  sys_.effectiveness = EffectivenessWindow(static_cast<std::size_t>(cfg_.effectiveness_window));
  const auto n = static_cast<std::size_t>(cfg_.agents);
  if (n > 0) {
    const auto baselines = baseline_prompts(d.prompt, cfg_.baselines_per_kind, cfg_.init.archetype_seed,
                                            cfg_.init.separation, cfg_.baseline_spread);
    for (std::size_t i = 0; i < n; ++i) {
      SimAgent a;
      a.kind = kAllKinds[i % std::size(kAllKinds)];
      a.rng = RandomStream(cfg_.seed, 0xa000 + i);
      RandomStream init = a.rng.fork(0);
      a.state = init_agent_state(static_cast<std::uint32_t>(i), a.kind, baselines, init, d, cfg_.init);
      a.aptitude = draw_aptitude(a.kind, init);
      sys_.routing.register_agent(a.id(), a.kind, a.state.capability);
      sys_.agents.push_back(std::move(a));
      sys_.agent_effectiveness.emplace_back(static_cast<std::size_t>(cfg_.effectiveness_window));
    }
  }
  sys_.comm_counts = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  sys_.omega = utilization_shares(sys_);
  queues_.resize(n);
  for (std::size_t i = 0; i < n; ++i) work_.push_back(std::make_unique<Work>(d.context, cfg_.context_window));
}

Orchestrator::~Orchestrator() = default;

void Orchestrator::log(std::string kind, std::string detail) {
  events_.push_back({sys_.tick, std::move(kind), std::move(detail)});
}

bool Orchestrator::idle() const { return active_.empty(); }
std::size_t Orchestrator::active_conversations() const { return active_.size(); }

void Orchestrator::admit(std::vector<Conversation>& incoming) {
  for (auto& c : incoming) {
    if (c.turns.empty()) {
      log("rejected", fmt::format("conversation {} has no turns", c.seed));
      continue;
    }
    auto a = std::make_unique<Active>(std::move(c), cfg_.dims.context, cfg_.context_window);
    a->ready_tick = sys_.tick;
    a->rec.seed = a->conv.seed;
    a->rec.task = a->conv.task;
    a->rec.turns = a->conv.turns.size();
    a->rec.arrival_tick = sys_.tick;
    active_.push_back(std::move(a));
    ++admitted_;
  }
}

// Phase 1: learn the dynamics from last tick's samples; in model mode the
// network also advances every live agent.
void Orchestrator::learn(TickReport& r) {
  const std::size_t n = sys_.size();
  if (n == 0) return;
  std::vector<Vector> flat(n);
  for (std::size_t i = 0; i < n; ++i) flat[i] = sys_.agents[i].state.flatten();
  auto ctx = std::make_shared<TransitionContext>();
  ctx->phi = global_state(flat, sys_.omega).phi;
  ctx->state_sum = Vector::Zero(cfg_.dims.flat_size());
  for (std::size_t i = 0; i < n; ++i)
    if (sys_.agents[i].live) {
      ctx->state_sum += flat[i];
      ++ctx->count;
    }
  tick_context_ = ctx;

  if (!learner_->buffer().empty()) {
    RandomStream rng = sys_.rng.fork(mix64(sys_.tick) ^ 0x7a1);
    learner_->train_step(rng, arm_blowup_ ? 100.0 : 1.0);
    r.learner_raw_gradient = learner_->last_raw_grad_norm();
    r.learner_applied_gradient = learner_->last_applied_grad_norm();
  }

  if (cfg_.transition_mode == TransitionMode::Model && ctx->count > 1) {
    GlobalState phi{ctx->phi, sys_.omega};
    std::vector<AgentState> next(n);
    for_each_index(n, cfg_.parallel, cfg_.threads, [&](std::size_t i) {
      const auto& a = sys_.agents[i];
      if (!a.live) return;
      // Neighbours enter only through their mean, so one synthetic
      // neighbour carrying it is equivalent.
      const Vector mean = (ctx->state_sum - flat[i]) / static_cast<double>(ctx->count - 1);
      next[i] = transition(a.state, {AgentState::unflatten(a.id(), mean, cfg_.dims)}, phi, learner_->net());
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (!sys_.agents[i].live) continue;
      sys_.agents[i].state = std::move(next[i]);
      sys_.routing.entry(static_cast<std::uint32_t>(i)).capability = sys_.agents[i].state.capability;
    }
  }
}

// Phase 2: one consensus round over the live agents' prompts.
void Orchestrator::negotiate(TickReport& r) {
  const auto live = sys_.live_ids();
  const bool deadlock = std::exchange(arm_deadlock_, false);
  const bool blowup = arm_blowup_;
  if (cfg_.variant == Variant::NoConsensus || live.size() < 2) {
    if (deadlock) log("injection_ignored", "consensus_deadlock: no consensus round this tick");
    return;
  }
  const std::size_t m = live.size();
  const int p = cfg_.dims.prompt;

  ConsensusProblem pb;
  pb.prompts.resize(m);
  for (std::size_t k = 0; k < m; ++k) pb.prompts[k] = sys_.agents[live[k]].state.prompt.cast<double>();

  if (cfg_.variant == Variant::StaticWeights) {
    pb.weights = uniform_weight_matrix(static_cast<int>(m));
  } else {
    std::vector<double> e(m);
    for (std::size_t k = 0; k < m; ++k) e[k] = sys_.agent_effectiveness[live[k]].value();
    pb.weights = adaptive_weight_matrix(e);
  }

  Matrix comm = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (a != b) comm(a, b) = sys_.comm_counts(live[a], live[b]) + sys_.comm_counts(live[b], live[a]);
  if (const double total = comm.sum(); total > 0.0) pb.comm_weights = comm / total;

  // Reward-head gradients with respect to each prompt.
  pb.q_gradients.resize(m);
  const auto& ctx = *tick_context_;
  for_each_index(m, cfg_.parallel, cfg_.threads, [&](std::size_t k) {
    const auto id = live[k];
    const Vector flat = sys_.agents[id].state.flatten();
    const Vector mean = ctx.count > 1 ? Vector((ctx.state_sum - flat) / static_cast<double>(ctx.count - 1))
                                      : Vector(Vector::Zero(flat.size()));
    Vector& g = work_[id]->gradient;
    g = q_gradient(learner_->net(), transition_input(flat, mean, ctx.phi), p);
    if (blowup) g *= 100.0;
    pb.q_gradients[k] = g;
  });

  ConsensusConfig ccfg = cfg_.consensus;
  if (deadlock) {
    // Alternating pushes along random directions, one Delta-ball radius per
    // iteration: the objective oscillates and the round cannot settle.
    RandomStream rng = sys_.rng.fork(mix64(sys_.tick) ^ 0xdead);
    double norm2 = 0.0;
    for (const auto& x : pb.prompts) norm2 += x.squaredNorm();
    for (auto& g : pb.q_gradients) {
      g = rng.normal_vector(p);
      g *= ccfg.grad_clip / g.norm();
    }
    ccfg.beta_grad = ccfg.delta_max_frac * std::sqrt(norm2) / (ccfg.grad_clip * std::sqrt(static_cast<double>(m)));
    pb.gradient_schedule = [](int k) { return k % 2 == 1 ? 1.0 : -1.0; };
  }
  pb.window = sys_.effectiveness;
  double used = 0.0;
  if (!sys_.utilization.empty())
    for (float u : sys_.utilization.back()) used += u;
  pb.resources = {used / static_cast<double>(m), 1.0};

  std::vector<VectorF> snapshot(m);
  for (std::size_t k = 0; k < m; ++k) snapshot[k] = sys_.agents[live[k]].state.prompt;

  const ConsensusOutcome out = run_consensus(pb, ccfg);
  r.consensus_ran = true;
  r.consensus_status = out.status;
  r.consensus_iterations = out.iterations;
  r.violations = out.violations.size();
  r.max_consensus_gradient = out.max_applied_gradient;
  if (out.status == ConsensusStatus::Converged) {
    for (std::size_t k = 0; k < m; ++k) sys_.agents[live[k]].state.prompt = out.configuration[k].cast<float>();
    for (const auto& v : out.violations)
      log("constraint_violation", fmt::format("{} {:.6g} > {:.6g}", to_string(v.kind), v.value, v.bound));
  } else {
    bool same = true;
    for (std::size_t k = 0; k < m; ++k) same = same && sys_.agents[live[k]].state.prompt == snapshot[k];
    r.round_restored = same;
    log("consensus_rollback", fmt::format("no convergence in {} iterations{}", out.iterations,
                                          deadlock ? " (injected deadlock)" : ""));
  }
  if (blowup)
    log("gradient_blowup", fmt::format("applied consensus gradient {:.6g}, learner {:.6g}",
                                       out.max_applied_gradient, r.learner_applied_gradient));
  const double cost = cfg_.timing.consensus_unit_ms * out.iterations * static_cast<double>(m * m);
  r.coordination_ms += cost;
  totals_.consensus_ms += cost;
}

// Phase 3: assign every pending turn to an agent queue.
void Orchestrator::route(TickReport& r) {
  arm_blowup_ = false;
  const std::size_t n = sys_.size();
  if (n == 0) return;
  const auto live = sys_.live_ids();
  if (live.empty()) return;

  std::vector<LoadSnapshot> load(n);
  for (const auto& a : active_)
    if (a->owner && !a->finished()) ++load[*a->owner].tasks;
  for (std::size_t i = 0; i < n; ++i) {
    load[i].queue = static_cast<int>(queues_[i].size());
    load[i].utilization = sys_.utilization.empty() ? 0.0 : static_cast<double>(sys_.utilization.back()[i]);
    sys_.routing.set_load(static_cast<std::uint32_t>(i), load[i]);
  }

  double cost = 0.0;
  for (auto& ap : active_) {
    Active& a = *ap;
    if (a.queued || a.finished()) continue;
    const Turn& turn = a.conv.turns[a.next];
    std::uint32_t to;
    if (cfg_.variant == Variant::RoundRobin) {
      to = live[round_robin_++ % live.size()];
      cost += cfg_.timing.routing_unit_ms;
    } else {
      to = turn.trigger ? sys_.routing.select_agent(a.conv.task, *turn.trigger)
                        : sys_.routing.select_agent(a.conv.task);
      cost += cfg_.timing.routing_unit_ms * static_cast<double>(live.size());
    }
    queues_[to].push_back(&a);
    a.queued = true;
    ++load[to].queue;
    if (a.owner != to) {
      if (a.owner) {
        --load[*a.owner].tasks;
        sys_.routing.set_load(*a.owner, load[*a.owner]);
      }
      ++load[to].tasks;
    }
    sys_.routing.set_load(to, load[to]);
    ++r.routed;
  }
  r.coordination_ms += cost;
  totals_.routing_ms += cost;
}

// Phase 4: every agent serves up to capacity turns from its queue. Agents
// run independently; results are committed in phase 5.
void Orchestrator::serve(TickReport&) {
  const std::size_t n = sys_.size();
  const std::size_t cap = static_cast<std::size_t>(cfg_.agent_capacity);
  std::vector<std::vector<Active*>> batch(n);
  for (std::size_t i = 0; i < n; ++i) {
    work_[i]->items.clear();
    auto& q = queues_[i];
    while (!q.empty() && batch[i].size() < cap) {
      batch[i].push_back(q.front());
      q.pop_front();
    }
  }
  const auto& t = cfg_.timing;
  for_each_index(n, cfg_.parallel, cfg_.threads, [&](std::size_t i) {
    if (batch[i].empty()) return;
    const SimAgent& agent = sys_.agents[i];
    Work& w = *work_[i];
    w.before = agent.state.flatten();
    RandomStream rng = agent.rng.fork(sys_.tick + 1);
    for (Active* a : batch[i]) {
      Work::Item item;
      item.conv = a;
      if (a->owner && *a->owner != agent.id()) {
        const SimAgent& from = sys_.agents[*a->owner];
        ContextTransfer tr = model_->handoff(from, agent, a->window.sum(), rng);
        a->window.set_sum(std::move(tr.context));
        item.handoff = true;
        item.from = from.id();
      }
      a->owner = agent.id();
      const Turn& turn = a->conv.turns[a->next];
      a->candidates.insert(a->candidates.end(), turn.tokens.begin(), turn.tokens.end());
      const Vector user = embedder_->encode(turn.tokens);
      a->window.push(user);
      w.window.push(user);
      item.response = model_->respond(agent, a->conv, turn, a->candidates, a->window.summary(), rng);
      const Vector reply = embedder_->encode(item.response.tokens);
      a->window.push(reply);
      w.window.push(reply);

      const auto& key = a->conv.answer_key;
      item.outcome = key.empty() ? 1.0
                                 : static_cast<double>(item.response.included.size()) /
                                       static_cast<double>(key.size());
      if (!a->responses.empty()) {
        const Tokens& prev = a->responses.back();
        item.coherence = cosine(embed(prev), embed(item.response.tokens));
        if (a->last_responder && *a->last_responder != agent.id()) {
          a->transition_rouge.push_back(rouge_l(prev, item.response.tokens).f);
          a->transition_cosine.push_back(item.coherence);
          const bool done = item.outcome >= 1.0;
          if (handoff_success(item.coherence, done)) ++a->rec.handoff_successes;
          if (!(item.coherence > kHandoffCosine)) ++a->rec.handoff_topic_failures;
          if (!done) ++a->rec.handoff_task_failures;
        }
      }
      a->last_responder = agent.id();
      a->responses.push_back(item.response.tokens);
      a->rec.agents.push_back(agent.id());
      if (turn.trigger) ++a->rec.triggered_turns;
      item.processing_ms = t.base_ms + t.per_token_ms * static_cast<double>(item.response.tokens.size()) +
                           (item.handoff ? t.handoff_ms : 0.0);
      w.items.push_back(std::move(item));
    }
  });
}

// Phase 5: serial commit in agent-id order.
void Orchestrator::commit(TickReport& r) {
  const std::size_t n = sys_.size();
  std::vector<float> util(n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    Work& w = *work_[i];
    if (w.items.empty()) continue;
    SimAgent& agent = sys_.agents[i];
    const auto id = agent.id();
    double reward = 0.0;
    for (auto& item : w.items) {
      Active& a = *item.conv;
      sys_.routing.record_outcome(id, a.conv.task, item.outcome);
      sys_.agent_effectiveness[i].push(item.outcome >= 1.0);
      if (item.handoff) {
        sys_.comm_counts(item.from, id) += 1.0;
        ++a.rec.handoffs;
        ++r.handoffs;
      }
      reward += combined_reward(item.outcome, item.coherence, cfg_.lambda_coherence);
      const double wait = static_cast<double>(sys_.tick - a.ready_tick) * cfg_.timing.tick_ms;
      const double latency = wait + item.processing_ms + r.coordination_ms;
      a.rec.turn_latency_ms.push_back(latency);
      totals_.processing_ms += item.processing_ms;
      ++a.next;
      a.queued = false;
      a.ready_tick = sys_.tick + 1;
    }
    agent.state.capability = sys_.routing.entry(id).capability;
    agent.state.context = w.window.summary().cast<float>();
    util[i] = static_cast<float>(static_cast<double>(w.items.size()) / cfg_.agent_capacity);
    r.served += w.items.size();

    TransitionSample s;
    s.state = std::move(w.before);
    s.action = task_column(w.items.back().conv->conv.task);
    s.next_state = agent.state.flatten();
    s.reward = reward / static_cast<double>(w.items.size());
    s.context = tick_context_;
    learner_->buffer().push(std::move(s));
  }
  if (n > 0) {
    sys_.utilization.push_back(std::move(util));
    while (sys_.utilization.size() > static_cast<std::size_t>(cfg_.utilization_window))
      sys_.utilization.pop_front();
    update_omega();
  }

  for (auto it = active_.begin(); it != active_.end();) {
    if ((*it)->finished()) {
      finalize(**it);
      ++r.completed;
      it = active_.erase(it);
    } else {
      ++it;
    }
  }
}

void Orchestrator::update_omega() { sys_.omega = utilization_shares(sys_); }

void Orchestrator::finalize(Active& a) {
  ConversationRecord& rec = a.rec;
  rec.completion_tick = sys_.tick;
  rec.context_score = context_score(a.transition_rouge);
  if (!a.transition_cosine.empty())
    rec.context_cosine = mean(a.transition_cosine);
  rec.final_response = a.responses.back();
  double min_cos = 1.0;
  for (std::size_t k = 1; k < a.responses.size(); ++k)
    min_cos = std::min(min_cos, cosine(embed(a.responses[k - 1]), embed(a.responses[k])));
  rec.min_adjacent_cosine = min_cos;
  const auto& key = a.conv.answer_key;
  rec.answer_complete = std::all_of(key.begin(), key.end(), [&](const std::string& t) {
    return std::find(rec.final_response.begin(), rec.final_response.end(), t) != rec.final_response.end();
  });
  rec.task_success = !key.empty() && task_success(rec.final_response, key, min_cos);
  if (!rec.turn_latency_ms.empty()) rec.latency_ms = mean(rec.turn_latency_ms);
  rec.total_ms = static_cast<double>(sys_.tick + 1 - rec.arrival_tick) * cfg_.timing.tick_ms;
  rec.probe = probe(a);
  sys_.effectiveness.push(rec.task_success);
  records_.push_back(std::move(rec));
}

// Context carried through a chain of further handoffs, each to the best
// agent of the next specialist kind; the score after k hops is ROUGE-L F of
// what the k-th agent reproduces against what the current owner does,
// averaged over independent drift replicates.
std::vector<double> Orchestrator::probe(const Active& a) const {
  std::vector<double> out;
  const int hops = cfg_.probe_handoffs;
  if (hops <= 0 || !a.owner) return out;
  // The chain of agents is deterministic; only the drift is replicated.
  std::vector<std::uint32_t> chain{*a.owner};
  const bool alone = sys_.live_ids().size() < 2;
  for (int k = 1; k <= hops; ++k) {
    const std::uint32_t cur = chain.back();
    chain.push_back(alone ? cur : sys_.routing.select_agent(a.conv.task, next_kind(sys_.agents[cur].kind), cur));
  }
  const auto summary = [](const Vector& v) {
    const double nrm = v.norm();
    return nrm > 0.0 ? Vector(v / nrm) : v;
  };
  const Tokens ref = model_->echo(sys_.agents[chain[0]].state.prompt, a.conv.seed, a.candidates,
                                  summary(a.window.sum()));
  out.assign(static_cast<std::size_t>(hops) + 1, 0.0);
  out[0] = 1.0;
  const RandomStream base(mix64(cfg_.seed ^ 0xf16e), a.conv.seed);
  for (int rep = 0; rep < cfg_.probe_replicates; ++rep) {
    RandomStream rng = base.fork(static_cast<std::uint64_t>(rep));
    Vector c = a.window.sum();
    for (int k = 1; k <= hops; ++k) {
      const auto& from = sys_.agents[chain[k - 1]];
      const auto& to = sys_.agents[chain[k]];
      if (from.id() != to.id()) c = context_drift(c, model_->fidelity(from, to), rng);
      const Tokens echo = model_->echo(to.state.prompt, a.conv.seed, a.candidates, summary(c));
      out[k] += rouge_l(echo, ref).f / cfg_.probe_replicates;
    }
  }
  return out;
}

TickReport Orchestrator::tick(std::vector<Conversation> incoming) {
  TickReport r;
  r.tick = sys_.tick;
  admit(incoming);
  learn(r);
  negotiate(r);
  route(r);
  serve(r);
  commit(r);

  // Lyapunov proxy: disagreement against the running mean prompt.
  const auto live = sys_.live_ids();
  if (!live.empty()) {
    Vector mean_p = Vector::Zero(cfg_.dims.prompt);
    for (auto id : live) mean_p += sys_.agents[id].state.prompt.cast<double>();
    mean_p /= static_cast<double>(live.size());
    double v = 0.0;
    for (auto id : live) v += (sys_.agents[id].state.prompt.cast<double>() - mean_p).squaredNorm();
    r.disagreement = 0.5 * v / cfg_.dims.prompt;
  }

  ++sys_.tick;
  if (sys_.tick % static_cast<std::uint64_t>(cfg_.checkpoint_interval) == 0 && !cfg_.checkpoint_dir.empty())
    checkpoint();

  ++totals_.ticks;
  if (r.consensus_ran) {
    ++totals_.consensus_rounds;
    if (r.consensus_status == ConsensusStatus::RolledBack) ++totals_.rollbacks;
  }
  totals_.violations += r.violations;
  totals_.max_applied_gradient =
      std::max({totals_.max_applied_gradient, r.max_consensus_gradient, r.learner_applied_gradient});
  totals_.peak_memory_bytes = std::max(totals_.peak_memory_bytes, memory_footprint());
  reports_.push_back(r);
  return r;
}

void Orchestrator::run(const std::vector<Conversation>& corpus) {
  std::size_t next = 0;
  auto due = [&](std::size_t i) {
    return static_cast<std::uint64_t>(static_cast<double>(i) / cfg_.arrivals_per_tick);
  };
  const std::uint64_t start = sys_.tick;
  while (next < corpus.size() || !idle()) {
    if (sys_.tick - start >= cfg_.max_ticks)
      throw StateError(fmt::format("run: corpus did not drain within {} ticks", cfg_.max_ticks));
    std::vector<Conversation> incoming;
    while (next < corpus.size() && start + due(next) <= sys_.tick) incoming.push_back(corpus[next++]);
    tick(std::move(incoming));
    if (sys_.live_ids().empty() && !idle()) throw StateError("run: no live agents left");
  }
}

void Orchestrator::inject_failure(FailureKind kind, std::uint32_t target) {
  if (target >= sys_.size())
    throw HarnessError(fmt::format("inject_failure: no agent {} (system has {})", target, sys_.size()));
  switch (kind) {
    case FailureKind::AgentCrash: {
      if (!sys_.agents[target].live) throw HarnessError(fmt::format("inject_failure: agent {} already dead", target));
      const std::uint32_t repl = sys_.routing.select_replacement(target);
      const SimAgent& dead = sys_.agents[target];
      const SimAgent& to = sys_.agents[repl];
      RandomStream rng = sys_.rng.fork(mix64(sys_.tick) ^ 0xc4a5);
      std::size_t moved = 0;
      for (auto& a : active_) {
        if (a->owner != target) continue;
        // The replacement receives the full history; the carried context
        // still passes through the fidelity channel.
        const double f = model_->fidelity(dead, to);
        a->window.set_sum(context_drift(a->window.sum(), f, rng));
        a->owner = repl;
        ++moved;
      }
      auto& q = queues_[target];
      for (Active* a : q) queues_[repl].push_back(a);
      q.clear();
      sys_.agents[target].live = false;
      sys_.routing.mark_dead(target);
      update_omega();
      log("agent_crash", fmt::format("agent {} down, {} conversations moved to agent {}", target, moved, repl));
      break;
    }
    case FailureKind::ConsensusDeadlock:
      arm_deadlock_ = true;
      log("inject", fmt::format("consensus_deadlock armed (agent {})", target));
      break;
    case FailureKind::GradientBlowup:
      arm_blowup_ = true;
      log("inject", fmt::format("gradient_blowup armed (agent {})", target));
      break;
  }
}

void Orchestrator::restore(SystemState s) {
  if (s.dims != sys_.dims || s.agents.size() != sys_.agents.size())
    throw StateError("restore: checkpoint does not match this system's shape");
  s.routing.config() = sys_.routing.config();
  sys_ = std::move(s);
  log("restore", fmt::format("state restored to tick {}", sys_.tick));
}

void Orchestrator::restore_checkpoint(const std::string& path) {
  SystemState s = read_checkpoint(path, cfg_.routing);
  s.last_checkpoint = {s.tick, path, state_digest(s)};
  restore(std::move(s));
}

std::string Orchestrator::checkpoint() {
  if (cfg_.checkpoint_dir.empty()) throw ConfigError("checkpoint: no checkpoint directory configured");
  std::filesystem::create_directories(cfg_.checkpoint_dir);
  const std::string path =
      (std::filesystem::path(cfg_.checkpoint_dir) / fmt::format("checkpoint_{:08d}.bin", sys_.tick)).string();
  const Checkpoint c = write_checkpoint(sys_, path);
  sys_.last_checkpoint = {c.tick, c.path, c.digest};
  log("checkpoint", fmt::format("{} {}", c.path, c.digest));
  return path;
}

std::size_t Orchestrator::memory_footprint() const {
  const StateDims& d = cfg_.dims;
  const std::size_t n = sys_.size();
  const std::size_t flat = static_cast<std::size_t>(d.flat_size());
  std::size_t b = 0;
  // Agents: state, routing entry, histories, windows, scratch.
  for (std::size_t i = 0; i < n; ++i) {
    b += sizeof(SimAgent) + flat * sizeof(float);
    const auto& e = sys_.routing.entries()[i];
    b += sizeof(AgentEntry) + static_cast<std::size_t>(e.capability.size()) * sizeof(float);
    for (const auto& h : e.history) b += h.capacity() * sizeof(float);
    b += sys_.agent_effectiveness[i].size() + sizeof(EffectivenessWindow);
    const Work& w = *work_[i];
    b += (w.window.size() + 1) * static_cast<std::size_t>(d.context) * sizeof(double);
    b += static_cast<std::size_t>(w.before.size() + w.gradient.size()) * sizeof(double);
    b += queues_[i].size() * sizeof(Active*);
  }
  b += n * n * sizeof(double);                                     // communication counts
  b += sys_.utilization.size() * n * sizeof(float);                // utilization history
  b += n * sizeof(double);                                         // omega
  // Conversations in flight.
  for (const auto& a : active_) {
    b += sizeof(Active) + (a->window.size() + 1) * static_cast<std::size_t>(d.context) * sizeof(double);
    b += tokens_bytes(a->candidates);
    for (const auto& r : a->responses) b += tokens_bytes(r);
    b += a->rec.turn_latency_ms.capacity() * sizeof(double);
  }
  // Learner: parameters with gradient and two Adam moments; the replay ring
  // is accounted at capacity since it is sized once.
  std::size_t params = 0;
  const auto& net = learner_->net();
  for (std::size_t l = 0; l < net.layer_count(); ++l)
    params += static_cast<std::size_t>(net.weights()[l].size() + net.biases()[l].size());
  b += params * 4 * sizeof(double);
  b += learner_->buffer().capacity() * (sizeof(TransitionSample) + 2 * flat * sizeof(double));
  return b;
}

}  // namespace orchestra

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
#include "orchestra/routing/routing.hpp"

#include <algorithm>
#include <string>

#include "orchestra/state/agent_state.hpp"

namespace orchestra {

double load_factor(const LoadSnapshot& s, const LoadConstants& k) {
  const auto ratio = [](double x, double cap) { return std::clamp(x / cap, 0.0, 1.0); };
  return k.alpha * ratio(s.tasks, k.c_max) + k.beta * ratio(s.queue, k.q_max) +
         k.gamma * ratio(s.utilization, k.r_max);
}

void RoutingTable::register_agent(std::uint32_t id, SpecialistKind kind, MatrixF capability) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const AgentEntry& e, std::uint32_t v) { return e.id < v; });
  if (it != entries_.end() && it->id == id)
    throw RoutingError("RoutingTable: agent " + std::to_string(id) + " already registered");
  AgentEntry e;
  e.id = id;
  e.kind = kind;
  e.capability = std::move(capability);
  entries_.insert(it, std::move(e));
}

const AgentEntry& RoutingTable::entry(std::uint32_t id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const AgentEntry& e, std::uint32_t v) { return e.id < v; });
  if (it == entries_.end() || it->id != id)
    throw RoutingError("RoutingTable: unknown agent " + std::to_string(id));
  return *it;
}

AgentEntry& RoutingTable::entry(std::uint32_t id) {
  return const_cast<AgentEntry&>(std::as_const(*this).entry(id));
}

double RoutingTable::capability(std::uint32_t id, TaskType task) const {
  const auto& e = entry(id);
  const int col = task_column(task);
  const double column = e.capability.col(col).cast<double>().mean();
  const auto& h = e.history[static_cast<std::size_t>(col)];
  std::vector<ScoredOutcome> scored;
  scored.reserve(h.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    scored.push_back({static_cast<double>(h[i]), static_cast<int>(h.size() - 1 - i)});
  const double hist = capability_score(scored, cfg_.decay);
  return cfg_.matrix_weight * column + (1.0 - cfg_.matrix_weight) * hist;
}

double RoutingTable::score(std::uint32_t id, TaskType task) const {
  return capability(id, task) * (1.0 - load_factor(entry(id).load, cfg_.load));
}

std::uint32_t RoutingTable::select_agent(TaskType task, std::optional<SpecialistKind> required,
                                         std::optional<std::uint32_t> exclude) const {
  if (entries_.empty()) throw RoutingError("select_agent: routing table is empty");
  const auto eligible = [&](const AgentEntry& e, bool by_kind) {
    if (!e.live) return false;
    if (exclude && e.id == *exclude) return false;
    return !by_kind || e.kind == *required;
  };
  bool by_kind = required.has_value();
  if (by_kind && std::none_of(entries_.begin(), entries_.end(),
                              [&](const AgentEntry& e) { return eligible(e, true); }))
    by_kind = false;
  std::optional<std::uint32_t> best;
  double best_score = -1.0;
  for (const auto& e : entries_) {
    if (!eligible(e, by_kind)) continue;
    const double s = score(e.id, task);
    if (s > best_score) {
      best_score = s;
      best = e.id;
    }
  }
  if (!best) throw RoutingError("select_agent: no live agent available");
  return *best;
}

void RoutingTable::record_outcome(std::uint32_t id, TaskType task, double outcome) {
  auto& e = entry(id);
  if (!(outcome >= 0.0 && outcome <= 1.0))
    throw ContractError("record_outcome: outcome must lie in [0,1]");
  e.capability = update_capability(e.capability, outcome,
                                   task_indicator(task, static_cast<int>(e.capability.cols())),
                                   cfg_.eta);
  auto& h = e.history[static_cast<std::size_t>(task_column(task))];
  h.push_back(static_cast<float>(outcome));
  if (h.size() > cfg_.history_cap) h.erase(h.begin(), h.begin() + static_cast<long>(h.size() - cfg_.history_cap));
}

std::uint32_t RoutingTable::select_replacement(std::uint32_t failed_id) const {
  const auto& failed = entry(failed_id);
  const VectorF ref = flatten(failed.capability);
  std::optional<std::uint32_t> best;
  double best_sim = -2.0;
  for (const auto& e : entries_) {
    if (!e.live || e.id == failed_id) continue;
    const double s = cosine(flatten(e.capability), ref);
    if (s > best_sim) {
      best_sim = s;
      best = e.id;
    }
  }
  if (!best) throw RecoveryError("select_replacement: no live candidate for agent " +
                                 std::to_string(failed_id));
  return *best;
}

void RoutingTable::set_load(std::uint32_t id, const LoadSnapshot& load) {
  if (load.tasks < 0 || load.queue < 0) throw ContractError("set_load: negative counts");
  entry(id).load = load;
}

void RoutingTable::mark_dead(std::uint32_t id) { entry(id).live = false; }

}  // namespace orchestra

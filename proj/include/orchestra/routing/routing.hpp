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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "orchestra/numerics/dense.hpp"
#include "orchestra/state/types.hpp"

namespace orchestra {

struct LoadSnapshot {
  int tasks = 0;             // N: active conversations
  int queue = 0;             // Q: pending requests
  double utilization = 0.0;  // R: resource utilization in [0,1]

  friend bool operator==(const LoadSnapshot&, const LoadSnapshot&) = default;
};

struct LoadConstants {
  double alpha = 0.4;
  double beta = 0.3;
  double gamma = 0.3;
  double c_max = 10.0;
  double q_max = 50.0;
  double r_max = 0.8;
};

/// alpha min(N/C_max,1) + beta min(Q/Q_max,1) + gamma min(R/R_max,1).
double load_factor(const LoadSnapshot& s, const LoadConstants& k = {});

struct RoutingConfig {
  LoadConstants load;
  double eta = 0.1;
  double decay = 0.95;
  /// Share of the capability-matrix column in the scalar score; the rest is
  /// the decayed outcome history.
  double matrix_weight = 0.5;
  std::size_t history_cap = 256;
};

struct AgentEntry {
  std::uint32_t id = 0;
  SpecialistKind kind = SpecialistKind::Generalist;
  bool live = true;
  MatrixF capability;
  /// Outcomes per task type, oldest first.
  std::array<std::vector<float>, 3> history;
  LoadSnapshot load;

  friend bool operator==(const AgentEntry&, const AgentEntry&) = default;
};

/// Capability and load bookkeeping for every registered agent. Mutations are
/// made by the orchestrator's serial commit phase; selection only reads.
class RoutingTable {
 public:
  explicit RoutingTable(RoutingConfig cfg = {}) : cfg_(cfg) {}

  void register_agent(std::uint32_t id, SpecialistKind kind, MatrixF capability);
  std::size_t size() const { return entries_.size(); }
  const std::vector<AgentEntry>& entries() const { return entries_; }
  std::vector<AgentEntry>& entries() { return entries_; }
  const AgentEntry& entry(std::uint32_t id) const;
  AgentEntry& entry(std::uint32_t id);
  const RoutingConfig& config() const { return cfg_; }
  RoutingConfig& config() { return cfg_; }

  /// Scalar capability C_a for a task type, in [0,1].
  double capability(std::uint32_t id, TaskType task) const;
  double score(std::uint32_t id, TaskType task) const;

  /// argmax C_a (1 - L_a) over live agents (of the required kind when one
  /// is given and available); ties go to the lowest id.
  std::uint32_t select_agent(TaskType task, std::optional<SpecialistKind> required = std::nullopt,
                             std::optional<std::uint32_t> exclude = std::nullopt) const;

  void record_outcome(std::uint32_t id, TaskType task, double outcome);

  /// Live agent whose flattened capability matrix is most cosine-similar to
  /// the failed agent's. Load is deliberately ignored.
  std::uint32_t select_replacement(std::uint32_t failed_id) const;

  void set_load(std::uint32_t id, const LoadSnapshot& load);
  void mark_dead(std::uint32_t id);
  bool is_live(std::uint32_t id) const { return entry(id).live; }

  friend bool operator==(const RoutingTable& a, const RoutingTable& b) {
    return a.entries_ == b.entries_;
  }

 private:
  RoutingConfig cfg_;
  std::vector<AgentEntry> entries_;  // sorted by id
};

}  // namespace orchestra

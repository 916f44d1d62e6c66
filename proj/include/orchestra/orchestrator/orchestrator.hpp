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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orchestra/agents/sim_agent.hpp"
#include "orchestra/convgen/generator.hpp"
#include "orchestra/metrics/rouge.hpp"
#include "orchestra/orchestrator/config.hpp"
#include "orchestra/orchestrator/system_state.hpp"
#include "orchestra/state/context_encoder.hpp"
#include "orchestra/state/transition.hpp"

namespace orchestra {

enum class FailureKind : std::uint8_t { AgentCrash, ConsensusDeadlock, GradientBlowup };
std::string_view to_string(FailureKind k);

struct Event {
  std::uint64_t tick = 0;
  std::string kind;
  std::string detail;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Per-conversation outcome, filled in when the last turn is served.
struct ConversationRecord {
  std::uint64_t seed = 0;
  TaskType task = TaskType::InformationRetrieval;
  std::size_t turns = 0;
  std::size_t handoffs = 0;
  std::size_t triggered_turns = 0;
  double context_score = 1.0;   // mean ROUGE-L F at transitions
  double context_cosine = 1.0;  // mean embedding cosine at transitions
  bool task_success = false;
  bool answer_complete = false;
  double min_adjacent_cosine = 1.0;
  std::size_t handoff_successes = 0;
  std::size_t handoff_topic_failures = 0;  // cosine <= 0.7
  std::size_t handoff_task_failures = 0;   // receiving agent missed answer tokens
  double latency_ms = 0.0;                 // mean per-turn response time
  double total_ms = 0.0;                   // first query to final response
  std::uint64_t arrival_tick = 0;
  std::uint64_t completion_tick = 0;
  std::vector<std::uint32_t> agents;       // owner per turn
  std::vector<double> turn_latency_ms;
  std::vector<double> probe;               // echo score after k handoffs, k = 0..K
  std::vector<std::string> final_response;

  std::string failure_category() const;
  friend bool operator==(const ConversationRecord&, const ConversationRecord&) = default;
};

struct TickReport {
  std::uint64_t tick = 0;
  bool consensus_ran = false;
  ConsensusStatus consensus_status = ConsensusStatus::Converged;
  int consensus_iterations = 0;
  bool round_restored = false;   // rolled back and prompts equal the snapshot
  std::size_t violations = 0;
  double max_consensus_gradient = 0.0;  // applied (post-clip)
  double learner_raw_gradient = 0.0;
  double learner_applied_gradient = 0.0;
  std::size_t routed = 0;
  std::size_t served = 0;
  std::size_t handoffs = 0;
  std::size_t completed = 0;
  double coordination_ms = 0.0;
  double disagreement = 0.0;     // Lyapunov proxy against the running mean prompt
};

struct RunTotals {
  std::uint64_t ticks = 0;
  std::size_t consensus_rounds = 0;
  std::size_t rollbacks = 0;
  std::size_t violations = 0;
  double consensus_ms = 0.0;
  double routing_ms = 0.0;
  double processing_ms = 0.0;
  std::size_t peak_memory_bytes = 0;
  double max_applied_gradient = 0.0;

  double overhead_fraction() const {
    const double coord = consensus_ms + routing_ms;
    return coord + processing_ms > 0.0 ? coord / (coord + processing_ms) : 0.0;
  }
  friend bool operator==(const RunTotals&, const RunTotals&) = default;
};

/// The control loop. One instance owns one SystemState plus the runtime that
/// is not checkpointed (conversations in flight, learner, logs).
class Orchestrator {
 public:
  Orchestrator(const SimulationConfig& cfg, std::shared_ptr<const Grammar> grammar = nullptr);
  ~Orchestrator();
  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  const SimulationConfig& config() const { return cfg_; }
  const SystemState& state() const { return sys_; }
  SystemState& state() { return sys_; }
  const TransitionLearner& learner() const { return *learner_; }
  const ResponseModel& response_model() const { return *model_; }

  /// Advances one tick, admitting the given conversations first.
  TickReport tick(std::vector<Conversation> incoming = {});
  /// Feeds a corpus on the arrival schedule and ticks until it drains.
  void run(const std::vector<Conversation>& corpus);

  /// Failure hooks. AgentCrash acts immediately; the other two arm the
  /// next consensus round.
  void inject_failure(FailureKind kind, std::uint32_t target);

  /// Replaces the checkpointed part of the state (rollback to a checkpoint).
  void restore(SystemState s);
  /// Reads and verifies a checkpoint file, then restores it. The restored
  /// state points at that file as its last checkpoint.
  void restore_checkpoint(const std::string& path);
  /// Writes a checkpoint now; returns its path. Needs a checkpoint dir.
  std::string checkpoint();

  bool idle() const;
  std::size_t active_conversations() const;
  const std::vector<ConversationRecord>& records() const { return records_; }
  const std::vector<Event>& events() const { return events_; }
  const std::vector<TickReport>& ticks() const { return reports_; }
  const RunTotals& totals() const { return totals_; }
  /// Accounted bytes of live simulation data right now.
  std::size_t memory_footprint() const;

 private:
  struct Active;
  struct Work;

  void admit(std::vector<Conversation>& incoming);
  void learn(TickReport& r);
  void negotiate(TickReport& r);
  void route(TickReport& r);
  void serve(TickReport& r);
  void commit(TickReport& r);
  void finalize(Active& a);
  std::vector<double> probe(const Active& a) const;
  void update_omega();
  void log(std::string kind, std::string detail);

  SimulationConfig cfg_;
  std::shared_ptr<const Grammar> grammar_;
  std::unique_ptr<TokenEmbedder> embedder_;
  std::unique_ptr<ResponseModel> model_;
  std::unique_ptr<TransitionLearner> learner_;
  SystemState sys_;

  std::deque<std::unique_ptr<Active>> active_;
  std::vector<std::deque<Active*>> queues_;  // per agent, FIFO
  std::vector<std::unique_ptr<Work>> work_;  // per agent scratch for the serve phase
  std::size_t round_robin_ = 0;
  bool arm_deadlock_ = false;
  bool arm_blowup_ = false;
  std::vector<std::uint32_t> acted_;         // agents that served last tick
  std::vector<Vector> acted_before_;         // their flattened states before serving
  std::shared_ptr<const TransitionContext> tick_context_;
  Vector running_mean_prompt_;
  std::size_t admitted_ = 0;

  std::vector<ConversationRecord> records_;
  std::vector<Event> events_;
  std::vector<TickReport> reports_;
  RunTotals totals_;
};

}  // namespace orchestra

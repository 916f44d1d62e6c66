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

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "orchestra/orchestrator/convergence.hpp"
#include "orchestra/orchestrator/experiment.hpp"
#include "orchestra/persistence/checkpoint.hpp"

using namespace orchestra;
namespace fs = std::filesystem;

namespace {

SimulationConfig small(int agents = 4, std::size_t conversations = 16) {
  SimulationConfig c;
  c.agents = agents;
  c.corpus_size = conversations;
  c.seed = 7;
  return c;
}

bool has_event(const Orchestrator& o, const std::string& kind) {
  for (const auto& e : o.events())
    if (e.kind == kind) return true;
  return false;
}

// Ticks until at least one conversation is in flight.
void warm_up(Orchestrator& o, const std::vector<Conversation>& corpus) {
  o.tick({corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(corpus.size() / 2)});
  for (int k = 0; k < 3; ++k) o.tick();
  ASSERT_GT(o.active_conversations(), 0u);
}

}  // namespace

TEST(Orchestrator, EmptySystemTicks) {
  SimulationConfig c;
  c.agents = 0;
  Orchestrator o(c);
  SystemState before = o.state();
  const auto r = o.tick();
  EXPECT_FALSE(r.consensus_ran);
  EXPECT_EQ(o.state().tick, 1u);
  SystemState after = o.state();
  after.tick = 0;
  EXPECT_TRUE(after == before);
  EXPECT_TRUE(o.idle());
}

TEST(Orchestrator, SerialAndParallelAgree) {
  auto cfg = small();
  const auto corpus = make_corpus(cfg);
  Orchestrator serial(cfg);
  serial.run(corpus);
  cfg.parallel = true;
  cfg.threads = 4;
  Orchestrator parallel(cfg);
  parallel.run(corpus);
  ASSERT_EQ(serial.records().size(), corpus.size());
  EXPECT_EQ(serial.records(), parallel.records());
  EXPECT_EQ(serial.events(), parallel.events());
  EXPECT_TRUE(serial.state() == parallel.state());
  EXPECT_EQ(state_digest(serial.state()), state_digest(parallel.state()));
}

TEST(Orchestrator, EveryConversationCompletes) {
  const auto cfg = small();
  const auto corpus = make_corpus(cfg);
  Orchestrator o(cfg);
  o.run(corpus);
  ASSERT_EQ(o.records().size(), corpus.size());
  for (const auto& r : o.records()) {
    EXPECT_EQ(r.agents.size(), r.turns);
    EXPECT_EQ(r.probe.size(), static_cast<std::size_t>(cfg.probe_handoffs + 1));
    EXPECT_EQ(r.probe[0], 1.0);
    EXPECT_GE(r.completion_tick, r.arrival_tick);
    EXPECT_GE(r.context_score, 0.0);
    EXPECT_LE(r.context_score, 1.0);
  }
  EXPECT_TRUE(o.idle());
}

TEST(Orchestrator, CheckpointsOnInterval) {
  auto cfg = small(3, 6);
  const auto dir = fs::temp_directory_path() / "orchestra_ckpt_interval";
  fs::remove_all(dir);
  cfg.checkpoint_dir = dir.string();
  Orchestrator o(cfg);
  o.run(make_corpus(cfg));
  ASSERT_LT(o.state().tick, 1000u);
  EXPECT_FALSE(fs::exists(dir / "checkpoint_00001000.bin"));
  while (o.state().tick < 1000) o.tick();
  const auto path = dir / "checkpoint_00001000.bin";
  ASSERT_TRUE(fs::exists(path));
  EXPECT_EQ(o.state().last_checkpoint.tick, 1000u);
  EXPECT_EQ(o.state().last_checkpoint.path, path.string());
  const SystemState disk = read_checkpoint(path.string(), cfg.routing);
  EXPECT_EQ(state_digest(disk), o.state().last_checkpoint.digest);
  EXPECT_EQ(disk.tick, 1000u);
  EXPECT_TRUE(has_event(o, "checkpoint"));
}

TEST(Orchestrator, RestoreReturnsToCheckpoint) {
  auto cfg = small();
  const auto dir = fs::temp_directory_path() / "orchestra_ckpt_restore";
  fs::remove_all(dir);
  cfg.checkpoint_dir = dir.string();
  const auto corpus = make_corpus(cfg);
  Orchestrator o(cfg);
  warm_up(o, corpus);
  const std::string path = o.checkpoint();
  const SystemState saved = o.state();
  EXPECT_EQ(saved.last_checkpoint.path, path);
  for (int k = 0; k < 5; ++k) o.tick();
  EXPECT_FALSE(o.state() == saved);
  o.restore_checkpoint(path);
  EXPECT_TRUE(o.state() == saved);
  EXPECT_TRUE(has_event(o, "restore"));

  Orchestrator other(small(5));
  EXPECT_THROW(other.restore(saved), StateError);
  Orchestrator nodir(small());
  EXPECT_THROW(nodir.checkpoint(), ConfigError);
}

TEST(Failures, DeadlockRollsBackExactly) {
  const auto cfg = small();
  const auto corpus = make_corpus(cfg);
  Orchestrator o(cfg);
  warm_up(o, corpus);
  o.inject_failure(FailureKind::ConsensusDeadlock, 0);
  std::vector<VectorF> before;
  for (const auto& a : o.state().agents) before.push_back(a.state.prompt);
  const auto r = o.tick();
  ASSERT_TRUE(r.consensus_ran);
  EXPECT_EQ(r.consensus_status, ConsensusStatus::RolledBack);
  EXPECT_TRUE(r.round_restored);
  EXPECT_EQ(r.consensus_iterations, cfg.consensus.max_iters);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(o.state().agents[i].state.prompt, before[i]);
  EXPECT_TRUE(has_event(o, "consensus_rollback"));
  EXPECT_EQ(o.totals().rollbacks, 1u);
  // The failure is one-shot and the system keeps serving.
  o.run({corpus.begin() + static_cast<std::ptrdiff_t>(corpus.size() / 2), corpus.end()});
  EXPECT_EQ(o.records().size(), corpus.size());
}

TEST(Failures, BlowupStaysClipped) {
  const auto cfg = small();
  const auto corpus = make_corpus(cfg);
  Orchestrator o(cfg);
  warm_up(o, corpus);
  o.inject_failure(FailureKind::GradientBlowup, 1);
  const auto r = o.tick();
  EXPECT_GT(r.learner_raw_gradient, cfg.learner.clip);
  EXPECT_LE(r.learner_applied_gradient, cfg.learner.clip + 1e-9);
  EXPECT_LE(r.max_consensus_gradient, cfg.consensus.grad_clip + 1e-9);
  EXPECT_TRUE(has_event(o, "gradient_blowup"));
  for (const auto& a : o.state().agents) EXPECT_TRUE(a.state.prompt.allFinite());
  o.run({corpus.begin() + static_cast<std::ptrdiff_t>(corpus.size() / 2), corpus.end()});
  EXPECT_LE(o.totals().max_applied_gradient, 5.0 + 1e-9);
}

TEST(Failures, CrashMovesWorkToReplacement) {
  const auto cfg = small();
  const auto corpus = make_corpus(cfg);
  Orchestrator o(cfg);
  warm_up(o, corpus);
  const std::uint64_t crash_tick = o.state().tick;
  o.inject_failure(FailureKind::AgentCrash, 0);
  EXPECT_FALSE(o.state().agents[0].live);
  EXPECT_FALSE(o.state().routing.is_live(0));
  EXPECT_EQ(o.state().omega[0], 0.0);
  EXPECT_TRUE(has_event(o, "agent_crash"));
  EXPECT_THROW(o.inject_failure(FailureKind::AgentCrash, 0), HarnessError);
  EXPECT_THROW(o.inject_failure(FailureKind::AgentCrash, 99), HarnessError);
  o.run({corpus.begin() + static_cast<std::ptrdiff_t>(corpus.size() / 2), corpus.end()});
  ASSERT_EQ(o.records().size(), corpus.size());
  for (const auto& r : o.records())
    if (r.arrival_tick > crash_tick) {
      for (auto id : r.agents) EXPECT_NE(id, 0u);
    }
}

TEST(SystemState, UtilizationShares) {
  const auto cfg = small();
  Orchestrator fresh(cfg);
  for (double w : utilization_shares(fresh.state())) EXPECT_DOUBLE_EQ(w, 0.25);
  Orchestrator o(cfg);
  o.run(make_corpus(cfg));
  auto w = utilization_shares(o.state());
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  SystemState s = o.state();
  s.agents[2].live = false;
  w = utilization_shares(s);
  EXPECT_EQ(w[2], 0.0);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
}

TEST(Convergence, ContractionIsMonotoneBelowHalfInverseL) {
  RandomStream rng(3);
  const auto h = ContractionHarness::random(6, rng, 1.0);
  const auto trace = h.run(rng.normal_vector(6), 0.4, 400);
  const auto v = verify_convergence(trace, h.target, 0.4, 1.0);
  EXPECT_TRUE(v.rate_condition);
  EXPECT_TRUE(v.monotone);
  ASSERT_TRUE(v.converged_tick.has_value());
  EXPECT_DOUBLE_EQ(v.bound_ticks, kConvergenceK / (0.4 * 1e-3));
  EXPECT_TRUE(v.within_bound);
}

TEST(Convergence, LargeStepDiverges) {
  RandomStream rng(4);
  const auto h = ContractionHarness::random(6, rng, 1.0);
  const auto trace = h.run(rng.normal_vector(6), 2.0, 30);
  const auto v = verify_convergence(trace, h.target, 2.0, 1.0);
  EXPECT_FALSE(v.rate_condition);
  EXPECT_FALSE(v.monotone);
  ASSERT_TRUE(v.first_increase.has_value());
  EXPECT_FALSE(v.converged_tick.has_value());
  EXPECT_FALSE(v.within_bound);
}

TEST(Convergence, StartingAtTheTarget) {
  const Vector star = Vector::Ones(3);
  const auto v = verify_convergence(std::vector<Vector>(5, star), star, 0.1, 1.0);
  ASSERT_TRUE(v.converged_tick.has_value());
  EXPECT_EQ(*v.converged_tick, 0u);
  EXPECT_TRUE(v.monotone);
  for (double x : v.lyapunov) EXPECT_EQ(x, 0.0);
}

TEST(Lipschitz, LinearMaps) {
  RandomStream rng(5);
  std::vector<Vector> samples;
  for (int k = 0; k < 6; ++k) samples.push_back(rng.normal_vector(4));
  EXPECT_NEAR(estimate_lipschitz([](const Vector& x) { return x; }, samples, rng), 1.0, 1e-9);
  EXPECT_NEAR(estimate_lipschitz([](const Vector& x) { return Vector(2.0 * x); }, samples, rng), 2.0, 1e-9);
}

TEST(Lipschitz, MlpBelowSpectralProduct) {
  RandomStream rng(6);
  Mlp<double> net({5, 16, 3});
  net.initialize(rng);
  double bound = 1.0;
  for (const auto& w : net.weights()) bound *= Eigen::JacobiSVD<Matrix>(w).singularValues()(0);
  std::vector<Vector> samples;
  for (int k = 0; k < 8; ++k) samples.push_back(rng.normal_vector(5));
  const double est = estimate_lipschitz([&](const Vector& x) { return net.predict(x); }, samples, rng);
  EXPECT_GT(est, 0.0);
  EXPECT_LE(est, bound * (1.0 + 1e-9));
}

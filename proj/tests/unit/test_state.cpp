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

#include <algorithm>
#include <cmath>
#include <set>

#include "orchestra/state/agent_state.hpp"
#include "orchestra/state/context_encoder.hpp"
#include "orchestra/state/replay_buffer.hpp"
#include "orchestra/state/transition.hpp"

using namespace orchestra;

namespace {

const StateDims kSmall{4, 3, 2, 3};

AgentState random_state(std::uint32_t id, RandomStream& r, const StateDims& d = kSmall) {
  AgentState s;
  s.agent_id = id;
  s.prompt = r.normal_vector(d.prompt).cast<float>();
  s.context = r.normal_vector(d.context).cast<float>();
  s.capability.resize(d.cap_rows, d.cap_cols);
  for (int j = 0; j < d.cap_cols; ++j)
    for (int i = 0; i < d.cap_rows; ++i) s.capability(i, j) = static_cast<float>(r.uniform());
  return s;
}

Mlp<double> transition_net(const StateDims& d, std::uint64_t seed) {
  const int n = d.flat_size();
  Mlp<double> net({3 * n, 6, 5, n + 1});
  RandomStream r(seed);
  net.initialize(r);
  for (auto& b : net.biases()) r.fill_normal(b);
  return net;
}

}  // namespace

TEST(AgentState, DefaultDimensions) {
  const StateDims d;
  EXPECT_EQ(d.prompt, 512);
  EXPECT_EQ(d.context, 768);
  EXPECT_EQ(d.cap_rows, 10);
  EXPECT_EQ(d.cap_cols, 5);
  EXPECT_EQ(d.flat_size(), 512 + 768 + 50);
}

TEST(AgentState, FlattenRoundTrip) {
  RandomStream r(1);
  const auto s = random_state(3, r);
  const Vector f = s.flatten();
  ASSERT_EQ(f.size(), kSmall.flat_size());
  EXPECT_EQ(f(0), static_cast<double>(s.prompt(0)));
  EXPECT_EQ(f(kSmall.prompt), static_cast<double>(s.context(0)));
  // Capability is column-major after prompt and context.
  EXPECT_EQ(f(kSmall.prompt + kSmall.context + 1), static_cast<double>(s.capability(1, 0)));
  EXPECT_EQ(AgentState::unflatten(3, f, kSmall), s);
  EXPECT_THROW(AgentState::unflatten(3, Vector::Zero(5), kSmall), ShapeError);
}

TEST(InitAgentState, IdenticalBaselinesGiveTheMean) {
  RandomStream r(2);
  const Vector base = r.normal_vector(kSmall.prompt);
  const std::vector<Vector> baselines(3, base);
  const auto s = init_agent_state(0, SpecialistKind::Grammar, baselines, r, kSmall);
  EXPECT_EQ(s.prompt, base.cast<float>());
}

TEST(InitAgentState, OrthogonalBaselinesStayInSpan) {
  const StateDims d{6, 3, 2, 3};
  Vector e1 = Vector::Zero(6), e2 = Vector::Zero(6);
  e1(0) = 1.0;
  e2(1) = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomStream r(seed);
    const auto s = init_agent_state(0, kAllKinds[seed % 4], {e1, e2}, r, d);
    const Vector p = s.prompt.cast<double>();
    const Vector proj = e1 * e1.dot(p) + e2 * e2.dot(p);
    EXPECT_LT((p - proj).norm(), 1e-9);
  }
}

TEST(InitAgentState, DeterministicAndValid) {
  const auto baselines = baseline_prompts(kSmall.prompt, 4, 9);
  RandomStream a(5), b(5);
  const auto s1 = init_agent_state(1, SpecialistKind::Reasoning, baselines, a, kSmall);
  const auto s2 = init_agent_state(1, SpecialistKind::Reasoning, baselines, b, kSmall);
  EXPECT_EQ(s1, s2);
  EXPECT_TRUE(all_finite(s1.prompt));
  EXPECT_TRUE((s1.capability.array() >= 0.0f).all() && (s1.capability.array() <= 1.0f).all());
  EXPECT_EQ(s1.dims(), kSmall);
}

TEST(InitAgentState, Errors) {
  RandomStream r(0);
  EXPECT_THROW(init_agent_state(0, SpecialistKind::Grammar, {}, r, kSmall), ConfigError);
  EXPECT_THROW(init_agent_state(0, SpecialistKind::Grammar, {Vector::Zero(5), Vector::Zero(5)}, r, kSmall),
               ShapeError);
}

TEST(GlobalState, Examples) {
  Vector one(1), two(1);
  one << 1.0;
  two << 2.0;
  EXPECT_NEAR(global_state({one, two}, {0.3, 0.7}).phi(0), 1.7, 1e-15);
  EXPECT_EQ(global_state({two}, {1.0}).phi, two);
  RandomStream r(3);
  const Vector x = r.normal_vector(5);
  EXPECT_LT((global_state({x, x}, {0.25, 0.75}).phi - x).norm(), 1e-15);
}

TEST(GlobalState, RejectsBadWeights) {
  Vector x = Vector::Ones(2);
  EXPECT_THROW(global_state({x, x}, {0.5, 0.6}), ContractError);
  EXPECT_THROW(global_state({x, x}, {1.2, -0.2}), ContractError);
  EXPECT_THROW(global_state({x}, {0.5, 0.5}), ShapeError);
  EXPECT_THROW(global_state(std::vector<Vector>{}, {}), ContractError);
}

TEST(GlobalState, FromAgentStatesMatchesFlattened) {
  RandomStream r(4);
  std::vector<AgentState> s{random_state(0, r), random_state(1, r), random_state(2, r)};
  const std::vector<double> w{0.2, 0.5, 0.3};
  const Vector expect = 0.2 * s[0].flatten() + 0.5 * s[1].flatten() + 0.3 * s[2].flatten();
  EXPECT_LT((global_state(s, w).phi - expect).norm(), 1e-12);
}

TEST(UpdateCapability, DirectFormula) {
  const MatrixF m = MatrixF::Zero(10, 5);
  const auto out = update_capability(m, 1.0, task_indicator(TaskType::Creative, 5), 0.1);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 5; ++j) EXPECT_FLOAT_EQ(out(i, j), j == 2 ? 0.1f : 0.0f);
}

TEST(UpdateCapability, FixedPoints) {
  RandomStream r(6);
  MatrixF m(3, 3);
  r.fill_normal(m);
  m = m.cwiseAbs().cwiseMin(1.0f);
  const Vector e = task_indicator(TaskType::ProblemSolving, 3);
  EXPECT_EQ(update_capability(m, 0.7, e, 0.0), m);
  MatrixF fixed = MatrixF::Zero(3, 3);
  fixed.col(1).setConstant(0.5f);
  EXPECT_EQ(update_capability(fixed, 0.5, e, 0.1), fixed);
  EXPECT_THROW(update_capability(m, 1.5, e, 0.1), ContractError);
  EXPECT_THROW(update_capability(m, 0.5, e, 1.5), ContractError);
  EXPECT_THROW(update_capability(m, 0.5, Vector(Vector::Ones(2)), 0.1), ShapeError);
}

TEST(UpdateCapability, ConvergesToOutcome) {
  MatrixF m = MatrixF::Constant(2, 3, 0.2f);
  const Vector e = task_indicator(TaskType::InformationRetrieval, 3);
  float prev = m(0, 0);
  for (int k = 0; k < 200; ++k) {
    m = update_capability(m, 1.0, e, 0.1);
    ASSERT_GE(m(0, 0), prev);
    prev = m(0, 0);
  }
  EXPECT_NEAR(m(0, 0), 1.0, 1e-6);
  EXPECT_FLOAT_EQ(m(0, 1), 0.2f);
}

TEST(CapabilityScore, Examples) {
  std::vector<ScoredOutcome> ones{{1, 0}, {1, 1}, {1, 2}}, zeros{{0, 0}, {0, 1}};
  EXPECT_DOUBLE_EQ(capability_score(ones), 1.0);
  EXPECT_DOUBLE_EQ(capability_score(zeros), 0.0);
  std::vector<ScoredOutcome> mixed{{1, 0}, {0, 1}};
  EXPECT_NEAR(capability_score(mixed, 0.95), 1.0 / 1.95, 1e-12);
  EXPECT_NEAR(capability_score(mixed, 0.95), 0.5128, 1e-4);
  EXPECT_DOUBLE_EQ(capability_score({}), 0.5);
  EXPECT_THROW(capability_score(mixed, 1.0), ContractError);
}

TEST(Lyapunov, Examples) {
  RandomStream r(7);
  const Vector a = r.normal_vector(6);
  EXPECT_EQ(lyapunov(a, a), 0.0);
  Vector b = a;
  b(2) += 2.0;
  EXPECT_NEAR(lyapunov(b, a), 2.0, 1e-12);
}

TEST(Lyapunov, PermutationInvariant) {
  RandomStream r(8);
  const Vector x = r.normal_vector(9), y = r.normal_vector(9);
  Eigen::PermutationMatrix<Eigen::Dynamic> p(9);
  p.setIdentity();
  std::reverse(p.indices().data(), p.indices().data() + 9);
  EXPECT_NEAR(lyapunov(Vector(p * x), Vector(p * y)), lyapunov(x, y), 1e-12);
}

TEST(Transition, ZeroNetGivesZeroState) {
  RandomStream r(9);
  const auto s = random_state(2, r);
  const int n = kSmall.flat_size();
  Mlp<double> net({3 * n, 4, 4, n + 1});
  const GlobalState phi{Vector::Zero(n), {1.0}};
  const auto next = transition(s, {}, phi, net);
  EXPECT_EQ(next.flatten(), Vector::Zero(n));
  EXPECT_EQ(next.agent_id, 2u);
}

TEST(Transition, MatchesStandaloneComposition) {
  RandomStream r(10);
  const int n = kSmall.flat_size();
  const auto net = transition_net(kSmall, 11);
  const auto s = random_state(0, r);
  std::vector<AgentState> nb{random_state(1, r), random_state(2, r)};
  const Vector phi = r.normal_vector(n);

  // Oracle: concat, loop forward, truncate reward head, clamp capabilities.
  Vector x(3 * n);
  x << s.flatten(), (nb[0].flatten() + nb[1].flatten()) / 2.0, phi;
  std::vector<double> a(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    std::vector<double> z(static_cast<std::size_t>(net.weights()[l].rows()));
    for (std::size_t i = 0; i < z.size(); ++i) {
      double acc = net.biases()[l](static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < a.size(); ++j)
        acc += net.weights()[l](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * a[j];
      z[i] = l + 1 < net.layer_count() ? std::max(acc, 0.0) : acc;
    }
    a = z;
  }
  for (int k = kSmall.prompt + kSmall.context; k < n; ++k) a[k] = std::clamp(a[k], 0.0, 1.0);

  const auto got = transition(s, nb, GlobalState{phi, {}}, net);
  const auto again = transition(s, nb, GlobalState{phi, {}}, net);
  EXPECT_EQ(got, again);
  const Vector f = got.flatten();
  for (int k = 0; k < n; ++k) EXPECT_NEAR(f(k), a[static_cast<std::size_t>(k)], 1e-5);
  EXPECT_TRUE((got.capability.array() >= 0.0f).all() && (got.capability.array() <= 1.0f).all());
}

TEST(Transition, ShapeMismatch) {
  RandomStream r(12);
  Mlp<double> net({5, 3});
  EXPECT_THROW(transition(random_state(0, r), {}, GlobalState{Vector::Zero(kSmall.flat_size()), {}}, net),
               ShapeError);
}

TEST(QGradient, MatchesFiniteDifferenceOnPrompt) {
  RandomStream r(13);
  const int n = kSmall.flat_size();
  const auto net = transition_net(kSmall, 14);
  const Vector x = r.normal_vector(3 * n);
  const Vector g = q_gradient(net, x, kSmall.prompt);
  ASSERT_EQ(g.size(), kSmall.prompt);
  for (int i = 0; i < kSmall.prompt; ++i) {
    Vector up = x, dn = x;
    up(i) += 1e-6;
    dn(i) -= 1e-6;
    EXPECT_NEAR(g(i), (net.predict(up)(n) - net.predict(dn)(n)) / 2e-6, 1e-6);
  }
}

TEST(EstimateReward, DeterministicEnvironmentIgnoresTrajectoryCount) {
  RandomStream r(15);
  const int n = kSmall.flat_size();
  const auto net = transition_net(kSmall, 16);
  const Vector s = random_state(0, r).flatten(), nb = Vector::Zero(n), phi = r.normal_vector(n);
  RandomStream a(1), b(1);
  RolloutOptions one{1, 5, {}}, ten{10, 5, {}};
  EXPECT_NEAR(estimate_reward(s, 0, nb, phi, kSmall, net, a, one),
              estimate_reward(s, 0, nb, phi, kSmall, net, b, ten), 1e-12);
}

TEST(EstimateReward, ConstantReward) {
  const int n = kSmall.flat_size();
  const auto net = transition_net(kSmall, 17);
  RandomStream r(18);
  RolloutOptions opts{4, 3, [](const Vector&, int, RandomStream&) { return 0.625; }};
  EXPECT_DOUBLE_EQ(estimate_reward(Vector::Zero(n), 1, Vector::Zero(n), Vector::Zero(n), kSmall, net, r, opts),
                   0.625);
}

TEST(EstimateReward, BernoulliRewardWithinThreeSigma) {
  const int n = kSmall.flat_size();
  const auto net = transition_net(kSmall, 19);
  RandomStream r(20);
  RolloutOptions opts{10, 5, [](const Vector&, int, RandomStream& g) { return g.bernoulli(0.5) ? 1.0 : 0.0; }};
  const int repeats = 400;
  double sum = 0.0;
  for (int k = 0; k < repeats; ++k)
    sum += estimate_reward(Vector::Zero(n), 0, Vector::Zero(n), Vector::Zero(n), kSmall, net, r, opts);
  const double sigma = 0.5 / std::sqrt(50.0 * repeats);
  EXPECT_NEAR(sum / repeats, 0.5, 3.0 * sigma);
}

TEST(Reward, Combined) {
  EXPECT_DOUBLE_EQ(combined_reward(1.0, 0.5, 0.5), 1.25);
  EXPECT_DOUBLE_EQ(combined_reward(0.0, 0.8, 0.0), 0.0);
  EXPECT_THROW(combined_reward(1.0, 1.0, -0.1), ContractError);
  EXPECT_THROW(combined_reward(INFINITY, 1.0, 0.5), ContractError);
}

TEST(ReplayBuffer, EvictsOldestFirst) {
  ReplayBuffer<int> buf(5);
  for (int i = 0; i < 12; ++i) {
    buf.push(i);
    ASSERT_LE(buf.size(), 5u);
  }
  EXPECT_EQ(buf.total_pushed(), 12u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(buf[i], static_cast<int>(7 + i));
  EXPECT_THROW(buf[5], ContractError);
  EXPECT_THROW(ReplayBuffer<int>(0), ConfigError);
}

TEST(ReplayBuffer, DefaultCapacity) {
  ReplayBuffer<int> buf;
  EXPECT_EQ(buf.capacity(), 10000u);
  for (int i = 0; i < 10050; ++i) buf.push(i);
  EXPECT_EQ(buf.size(), 10000u);
  EXPECT_EQ(buf[0], 50);
}

TEST(ReplayBuffer, SampleDrawsStoredItemsDeterministically) {
  ReplayBuffer<int> buf(40);
  for (int i = 0; i < 100; ++i) buf.push(i);
  RandomStream a(3), b(3);
  const auto s1 = buf.sample(32, a), s2 = buf.sample(32, b);
  ASSERT_EQ(s1.size(), 32u);
  for (std::size_t k = 0; k < 32; ++k) {
    EXPECT_EQ(s1[k], s2[k]);
    EXPECT_GE(*s1[k], 60);
  }
  ReplayBuffer<int> empty(3);
  EXPECT_THROW(empty.sample(1, a), StateError);
}

TEST(ContextWindow, KeepsLastTurns) {
  ContextWindow w(4, 20);
  RandomStream r(21);
  std::vector<Vector> turns;
  for (int i = 0; i < 35; ++i) {
    turns.push_back(r.normal_vector(4));
    w.push(turns.back());
  }
  EXPECT_EQ(w.size(), 20u);
  Vector expect = Vector::Zero(4);
  for (int i = 15; i < 35; ++i) expect += turns[static_cast<std::size_t>(i)];
  EXPECT_LT((w.sum() - expect).norm(), 1e-12);
  EXPECT_NEAR(w.summary().norm(), 1.0, 1e-12);
  EXPECT_THROW(w.push(Vector::Zero(3)), ShapeError);
  EXPECT_EQ(ContextWindow(4, 2).summary(), Vector::Zero(4));
}

TEST(TokenEmbedder, DeterministicPerToken) {
  TokenEmbedder a(768, 1), b(768, 1), c(768, 2);
  EXPECT_EQ(a.embed("alpha"), b.embed("alpha"));
  EXPECT_NE(a.embed("alpha"), c.embed("alpha"));
  EXPECT_EQ(a.embed("alpha").size(), 768);
  EXPECT_LT(std::abs(cosine(a.embed("alpha"), a.embed("beta"))), 0.2);
  EXPECT_LT((a.encode({"x", "y"}) - a.embed("x") - a.embed("y")).norm(), 1e-12);
}

TEST(TransitionLearner, ClipsAndLearns) {
  const StateDims d{3, 2, 1, 3};
  LearnerConfig cfg;
  cfg.hidden1 = 16;
  cfg.hidden2 = 8;
  cfg.adam.learning_rate = 1e-2;
  TransitionLearner learner(d, cfg, 7);
  RandomStream r(22);
  EXPECT_EQ(learner.train_step(r), 0.0);
  const int n = d.flat_size();
  auto ctx = std::make_shared<TransitionContext>(TransitionContext{Vector::Zero(n), Vector::Zero(n), 1});
  for (int i = 0; i < 16; ++i) {
    TransitionSample s;
    s.state = r.normal_vector(n);
    s.next_state = 0.5 * s.state;
    s.reward = s.state(0);
    s.context = ctx;
    learner.buffer().push(std::move(s));
  }
  const double first = learner.train_step(r);
  double last = first;
  for (int i = 0; i < 300; ++i) {
    last = learner.train_step(r);
    ASSERT_LE(learner.last_applied_grad_norm(), cfg.clip + 1e-9);
  }
  EXPECT_LT(last, first);
  learner.train_step(r, 1e6);
  EXPECT_GT(learner.last_raw_grad_norm(), cfg.clip);
  EXPECT_LE(learner.last_applied_grad_norm(), cfg.clip + 1e-9);
}

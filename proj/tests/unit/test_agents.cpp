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

#include "orchestra/agents/sim_agent.hpp"

using namespace orchestra;

namespace {

constexpr int kPrompt = 16;

SimAgent make_agent(std::uint32_t id, SpecialistKind kind, const MatrixF& cap, const VectorF& prompt) {
  SimAgent a;
  a.state.agent_id = id;
  a.state.prompt = prompt;
  a.state.context = VectorF::Zero(768);
  a.state.capability = cap;
  a.kind = kind;
  return a;
}

struct Fixture : ::testing::Test {
  TokenEmbedder embedder{768, 3};
  ResponseModel model{Grammar::builtin(), embedder, kPrompt};
  VectorF prompt = VectorF::Ones(kPrompt);
  Conversation conv;
  Turn turn;

  void SetUp() override {
    conv.seed = 5;
    conv.task = TaskType::ProblemSolving;
    conv.answer_key = {"ada", "kepler", "lantern", "harbor"};
    turn.tokens = {"solve", "it"};
  }
};

double mean_drift_cosine(double f, int dim, int seeds) {
  double s = 0.0;
  for (int k = 0; k < seeds; ++k) {
    RandomStream r(static_cast<std::uint64_t>(k), 9);
    const Vector c = r.normal_vector(dim);
    s += cosine(context_drift(c, f, r), c);
  }
  return s / seeds;
}

}  // namespace

TEST(Aptitude, Ranges) {
  RandomStream r(1);
  for (int i = 0; i < 200; ++i) {
    const auto g = draw_aptitude(SpecialistKind::Generalist, r);
    for (double t : g.task) ASSERT_TRUE(t >= 0.75 && t <= 0.85);
    const auto s = draw_aptitude(SpecialistKind::Knowledge, r);
    ASSERT_TRUE(s.trigger_match >= 0.95 && s.trigger_match <= 0.98);
    for (double t : s.task) ASSERT_TRUE(t >= 0.6 && t <= 0.8);
  }
}

TEST(Aptitude, AlignmentRules) {
  SimAgent a;
  a.kind = SpecialistKind::Reasoning;
  a.aptitude.task = {0.6, 0.7, 0.8};
  a.aptitude.trigger_match = 0.97;
  Turn t;
  EXPECT_DOUBLE_EQ(a.alignment(t, TaskType::Creative), 0.8);
  t.trigger = SpecialistKind::Reasoning;
  EXPECT_DOUBLE_EQ(a.alignment(t, TaskType::Creative), 0.97);
  t.trigger = SpecialistKind::Grammar;
  EXPECT_DOUBLE_EQ(a.alignment(t, TaskType::ProblemSolving), 0.8 * 0.7);
}

TEST_F(Fixture, InclusionProbability) {
  EXPECT_DOUBLE_EQ(model.inclusion_probability(0.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(model.inclusion_probability(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(model.inclusion_probability(1.0, 0.6), 0.6);
  EXPECT_NEAR(model.inclusion_probability(0.8, 1.0), 1.0 / (1.0 + std::exp(-6.0 * 0.3)), 1e-15);
  EXPECT_LT(model.inclusion_probability(0.2, 1.0), model.inclusion_probability(0.4, 1.0));
}

TEST_F(Fixture, FullAlignmentIncludesEveryAnswerToken) {
  auto a = make_agent(0, SpecialistKind::Generalist, MatrixF::Constant(10, 5, 0.5f), prompt);
  a.aptitude.task = {1.0, 1.0, 1.0};
  for (std::uint64_t s = 0; s < 50; ++s) {
    RandomStream r(s);
    const auto resp = model.respond(a, conv, turn, turn.tokens, Vector::Zero(768), r);
    EXPECT_EQ(resp.included, conv.answer_key);
    for (const auto& t : conv.answer_key)
      EXPECT_NE(std::find(resp.tokens.begin(), resp.tokens.end(), t), resp.tokens.end());
  }
}

TEST_F(Fixture, HalfAlignmentIncludesHalf) {
  auto a = make_agent(0, SpecialistKind::Generalist, MatrixF::Constant(10, 5, 0.5f), prompt);
  a.aptitude.task = {0.5, 0.5, 0.5};
  const int n = 4000;
  RandomStream r(2);
  std::size_t included = 0;
  for (int s = 0; s < n; ++s) included += model.respond(a, conv, turn, turn.tokens, Vector::Zero(768), r).included.size();
  const double trials = n * 4.0;
  // Binomial(16000, 0.5): 3 sigma is 0.0119.
  EXPECT_NEAR(included / trials, 0.5, 3.0 * std::sqrt(0.25 / trials));
}

TEST_F(Fixture, SameRngSameResponse) {
  auto a = make_agent(0, SpecialistKind::Generalist, MatrixF::Constant(10, 5, 0.5f), prompt);
  RandomStream r1(8), r2(8);
  RandomStream c(4);
  const Vector ctx = c.normal_vector(768);
  const auto x = model.respond(a, conv, turn, turn.tokens, ctx, r1);
  const auto y = model.respond(a, conv, turn, turn.tokens, ctx, r2);
  EXPECT_EQ(x.tokens, y.tokens);
  EXPECT_EQ(x.included, y.included);
}

TEST_F(Fixture, RecallRanksCandidatesByContext) {
  const std::vector<std::string> cands{"b", "a", "c", "a", "d", "e", "f", "g", "h"};
  const Vector ctx = embedder.embed("c") * 5.0 + embedder.embed("g") * 3.0;
  const auto got = model.recall(ctx, cands);
  ASSERT_EQ(got.size(), 6u);
  EXPECT_EQ(got[0], "c");
  EXPECT_EQ(got[1], "g");
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), 6u);
  // Zero context: all scores tie, so lexical order decides.
  const auto tied = model.recall(Vector::Zero(768), cands);
  EXPECT_EQ(tied, (std::vector<std::string>{"a", "b", "c", "d", "e", "f"}));
}

TEST_F(Fixture, EchoIsTemplatePlusRecall) {
  const Vector ctx = embedder.embed("x");
  const auto e = model.echo(prompt, 11, {"x", "y"}, ctx);
  const auto pat = model.pattern_tokens(model.choose_pattern(prompt), 11);
  ASSERT_NE(std::find(pat.begin(), pat.end(), "<content>"), pat.end());
  EXPECT_EQ(e.size(), pat.size() - 1 + 2);
  EXPECT_NE(std::find(e.begin(), e.end(), "x"), e.end());
  EXPECT_EQ(model.pattern_count(), Grammar::builtin().alternatives("RESPONSE").size());
  EXPECT_THROW(model.choose_pattern(VectorF::Ones(3)), ShapeError);
}

TEST_F(Fixture, IdenticalCapabilitiesCopyContext) {
  const MatrixF cap = MatrixF::Constant(10, 5, 0.4f);
  const auto a = make_agent(0, SpecialistKind::Grammar, cap, prompt);
  const auto b = make_agent(1, SpecialistKind::Knowledge, cap, prompt);
  EXPECT_EQ(model.fidelity(a, b), 1.0);
  RandomStream r(3);
  const Vector ctx = r.normal_vector(768);
  const auto t = model.handoff(a, b, ctx, r);
  EXPECT_EQ(t.context, ctx);
  EXPECT_EQ(t.fidelity, 1.0);
  EXPECT_EQ(t.context.size(), 768);
}

TEST_F(Fixture, OrthogonalCapabilitiesHitTheFloor) {
  MatrixF ca = MatrixF::Zero(10, 5), cb = MatrixF::Zero(10, 5);
  ca.col(0).setOnes();
  cb.col(1).setOnes();
  const auto a = make_agent(0, SpecialistKind::Grammar, ca, prompt);
  const auto b = make_agent(1, SpecialistKind::Knowledge, cb, prompt);
  EXPECT_DOUBLE_EQ(model.fidelity(a, b), 0.7);
  // Noise of equal norm and nearly orthogonal: cos = f / sqrt(f^2 + (1-f)^2).
  const double expect = 0.7 / std::sqrt(0.49 + 0.09);
  double mean = 0.0;
  for (int s = 0; s < 200; ++s) {
    RandomStream r(static_cast<std::uint64_t>(s));
    const Vector ctx = r.normal_vector(768);
    mean += cosine(model.handoff(a, b, ctx, r).context, ctx) / 200.0;
  }
  EXPECT_NEAR(mean, expect, 0.01);
  EXPECT_LT(mean, 0.95);
}

TEST_F(Fixture, HandoffRequiresLiveAgents) {
  auto a = make_agent(0, SpecialistKind::Grammar, MatrixF::Constant(10, 5, 0.5f), prompt);
  auto b = make_agent(1, SpecialistKind::Grammar, MatrixF::Constant(10, 5, 0.5f), prompt);
  b.live = false;
  RandomStream r(1);
  EXPECT_THROW(model.handoff(a, b, Vector::Ones(768), r), StateError);
  EXPECT_EQ(model.handoff(a, a, Vector::Ones(768), r).context, Vector::Ones(768));
}

TEST(ContextDrift, Endpoints) {
  RandomStream r(1);
  const Vector c = r.normal_vector(768);
  EXPECT_EQ(context_drift(c, 1.0, r), c);
  EXPECT_NEAR(context_drift(c, 0.3, r).norm(), c.norm(), 1e-9);
  EXPECT_NEAR(mean_drift_cosine(0.0, 768, 200), 0.0, 0.01);
  EXPECT_THROW(context_drift(c, 1.5, r), ContractError);
  EXPECT_EQ(context_drift(Vector::Zero(4), 0.5, r), Vector::Zero(4));
}

TEST(ContextDrift, CosineIncreasesWithFidelity) {
  double prev = -1.0;
  for (double f = 0.0; f <= 1.0001; f += 0.1) {
    const double m = mean_drift_cosine(std::min(f, 1.0), 768, 100);
    EXPECT_GT(m, prev);
    prev = m;
  }
}

TEST(ContextDrift, RepeatedHandoffsDecayMonotonically) {
  constexpr int kHops = 10, kSeeds = 200;
  std::vector<double> mean(kHops + 1, 0.0);
  for (int s = 0; s < kSeeds; ++s) {
    RandomStream r(static_cast<std::uint64_t>(s));
    const Vector c0 = r.normal_vector(768);
    Vector c = c0;
    for (int k = 0; k <= kHops; ++k) {
      mean[static_cast<std::size_t>(k)] += cosine(c, c0) / kSeeds;
      c = context_drift(c, 0.85, r);
    }
  }
  for (int k = 1; k <= kHops; ++k) EXPECT_LT(mean[static_cast<std::size_t>(k)], mean[static_cast<std::size_t>(k - 1)]);
}

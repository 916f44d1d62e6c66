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

#include <cmath>

#include "orchestra/numerics/dense.hpp"
#include "orchestra/numerics/mlp.hpp"
#include "orchestra/numerics/optim.hpp"
#include "orchestra/numerics/random.hpp"

using namespace orchestra;

namespace {

// Layer-by-layer loops with no Eigen products.
Vector naive_forward(const Mlp<double>& net, const Vector& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& w = net.weights()[l];
    const auto& b = net.biases()[l];
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = b(i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = (l + 1 < net.layer_count()) ? std::max(0.0, s) : s;
    }
    a = std::move(z);
  }
  return Eigen::Map<Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
}

Mlp<double> random_net(std::vector<int> sizes, std::uint64_t seed) {
  Mlp<double> net(std::move(sizes));
  RandomStream rng(seed);
  net.initialize(rng);
  for (auto& b : net.biases()) rng.fill_normal(b);
  return net;
}

}  // namespace

TEST(RandomStream, SplitMixFinalizerReference) {
  // Published first output of SplitMix64 seeded with 0.
  EXPECT_EQ(mix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(RandomStream, SameSeedSameSequence) {
  RandomStream a(7, 3), b(7, 3), c(7, 4);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(RandomStream, ForkDoesNotAdvanceParent) {
  RandomStream a(11);
  const RandomStream before = a;
  auto child = a.fork(5);
  EXPECT_EQ(a, before);
  EXPECT_EQ(child.next_u64(), a.fork(5).next_u64());
  EXPECT_NE(a.fork(5).next_u64(), a.fork(6).next_u64());
}

TEST(RandomStream, FromStateResumes) {
  RandomStream a(99);
  for (int i = 0; i < 17; ++i) a.next_u64();
  auto b = RandomStream::from_state(a.key(), a.counter());
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RandomStream, UniformAndNormalMoments) {
  RandomStream r(1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(RandomStream, BelowAndCategorical) {
  RandomStream r(2);
  EXPECT_THROW(r.below(0), ContractError);
  std::array<int, 3> counts{};
  const std::array<double, 3> w{1.0, 0.0, 3.0};
  for (int i = 0; i < 40000; ++i) ++counts[r.categorical(w)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[2] / 40000.0, 0.75, 0.01);
  for (int i = 0; i < 1000; ++i) ASSERT_LT(r.below(7), 7u);
}

TEST(Dense, CosineBasics) {
  Vector a(3), b(3);
  a << 1, 2, 3;
  b << -3, 0, 1;
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-15);
  EXPECT_NEAR(cosine(a, b), 0.0, 1e-15);
  EXPECT_NEAR(cosine(Vector(4.0 * a), b + a), cosine(a, b + a), 1e-15);
  EXPECT_EQ(cosine(a, Vector::Zero(3)), 0.0);
  EXPECT_THROW(cosine(a, Vector::Zero(2)), ShapeError);
}

TEST(Mlp, ZeroWeightsReturnOutputBias) {
  Mlp<double> net({4, 3, 2});
  net.biases().back() << 0.25, -1.5;
  Vector x = Vector::Constant(4, 7.0);
  EXPECT_EQ(net.predict(x), net.biases().back());
}

TEST(Mlp, ReluClampsNegativeInput) {
  Mlp<double> net({1, 1, 1});
  net.weights()[0](0, 0) = 1.0;
  net.weights()[1](0, 0) = 1.0;
  Vector x(1);
  x << -1.0;
  EXPECT_EQ(net.predict(x)(0), 0.0);
}

TEST(Mlp, ForwardMatchesLoopOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto net = random_net({12, 9, 7, 5}, seed);
    RandomStream r(100 + seed);
    const Vector x = r.normal_vector(12);
    EXPECT_LT((net.predict(x) - naive_forward(net, x)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Mlp, BatchedForwardMatchesColumns) {
  auto net = random_net({6, 8, 3}, 4);
  RandomStream r(5);
  Matrix x(6, 4);
  r.fill_normal(x);
  const Matrix y = net.predict(x);
  for (int c = 0; c < 4; ++c) EXPECT_LT((y.col(c) - net.predict(Vector(x.col(c)))).norm(), 1e-12);
}

TEST(Mlp, ShapeErrors) {
  EXPECT_THROW(Mlp<double>({3}), ShapeError);
  EXPECT_THROW(Mlp<double>({3, 0, 2}), ShapeError);
  Mlp<double> net({3, 2});
  EXPECT_THROW(net.predict(Vector(Vector::Zero(4))), ShapeError);
  EXPECT_THROW(net.backward(Vector(Vector::Zero(2))), StateError);
}

TEST(Mlp, ZeroLossGradientGivesZeroGradients) {
  auto net = random_net({5, 4, 3}, 9);
  RandomStream r(3);
  net.forward(r.normal_vector(5));
  EXPECT_TRUE(net.backward(Vector(Vector::Zero(3))).is_zero());
}

TEST(Mlp, LinearNetMatchesLeastSquaresGradient) {
  // f(x) = W x + b, loss 0.5 |f - y|^2: dW = r x^T, db = r.
  auto net = random_net({4, 3}, 12);
  RandomStream r(13);
  const Vector x = r.normal_vector(4), y = r.normal_vector(3);
  const Vector resid = net.weights()[0] * x + net.biases()[0] - y;
  net.forward(x);
  const auto g = net.backward(resid);
  EXPECT_LT((g.weights[0] - resid * x.transpose()).norm(), 1e-12);
  EXPECT_LT((g.biases[0] - resid).norm(), 1e-12);
}

TEST(Mlp, BatchGradientIsSumOfSampleGradients) {
  auto net = random_net({3, 5, 2}, 21);
  RandomStream r(22);
  Matrix x(3, 3), dy(2, 3);
  r.fill_normal(x);
  r.fill_normal(dy);
  ForwardCache<double> cache;
  net.forward(x, cache);
  const auto batch = net.backward(cache, dy).grads;
  auto sum = net.zero_gradients();
  for (int c = 0; c < 3; ++c) {
    ForwardCache<double> cc;
    net.forward(Matrix(x.col(c)), cc);
    sum += net.backward(cc, Matrix(dy.col(c))).grads;
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    EXPECT_LT((batch.weights[l] - sum.weights[l]).norm(), 1e-12);
    EXPECT_LT((batch.biases[l] - sum.biases[l]).norm(), 1e-12);
  }
}

TEST(Mlp, InputGradientMatchesFiniteDifference) {
  auto net = random_net({5, 7, 3}, 31);
  RandomStream r(32);
  const Vector x = r.normal_vector(5), w = r.normal_vector(3);
  const Vector g = net.input_gradient(x, w);
  for (int i = 0; i < 5; ++i) {
    Vector up = x, dn = x;
    up(i) += 1e-6;
    dn(i) -= 1e-6;
    const double num = (w.dot(net.predict(up)) - w.dot(net.predict(dn))) / 2e-6;
    EXPECT_NEAR(g(i), num, 1e-6);
  }
}

TEST(FiniteDiff, SmallEpsAgrees) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto net = random_net({6, 8, 5, 3}, 40 + seed);
    RandomStream r(seed);
    EXPECT_LT(finite_diff_check(net, r.normal_vector(6), 1e-5), 1e-4);
  }
}

TEST(FiniteDiff, ZeroNetIsExact) {
  Mlp<double> net({4, 3, 2});
  EXPECT_EQ(finite_diff_check(net, Vector::Ones(4), 1e-5), 0.0);
}

TEST(FiniteDiff, CoarseEpsIsWorse) {
  auto net = random_net({6, 8, 5, 3}, 77);
  RandomStream r(78);
  const Vector x = r.normal_vector(6);
  EXPECT_GT(finite_diff_check(net, x, 1.0), finite_diff_check(net, x, 1e-5));
  EXPECT_THROW(finite_diff_check(net, x, 0.0), ContractError);
}

TEST(Clip, ScalesDownAboveThreshold) {
  Vector g(2);
  g << 6.0, 8.0;
  const Vector c = clip_norm(g, 5.0);
  EXPECT_NEAR(c.norm(), 5.0, 1e-12);
  EXPECT_NEAR(cosine(c, g), 1.0, 1e-12);
  Vector small(2);
  small << 1.8, 2.4;
  EXPECT_EQ(clip_norm(small, 5.0), small);
  EXPECT_EQ(clip_norm(Vector::Zero(3)), Vector::Zero(3));
  EXPECT_THROW(clip_norm(g, 0.0), ContractError);
}

TEST(Clip, ParameterGradients) {
  auto net = random_net({3, 4, 2}, 5);
  auto g = net.zero_gradients();
  g.weights[0].setConstant(10.0);
  const double before = g.norm();
  const auto c = clip_gradient(g);
  EXPECT_NEAR(c.norm(), kDefaultGradientClip, 1e-12);
  EXPECT_NEAR(c.weights[0](0, 0) / g.weights[0](0, 0), kDefaultGradientClip / before, 1e-12);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto net = random_net({3, 4, 2}, 6);
  const auto before = net;
  AdamState<double> st;
  for (int i = 0; i < 5; ++i) adam_step(net, net.zero_gradients(), st);
  EXPECT_EQ(net, before);
}

TEST(Adam, FirstStepMatchesHandFormula) {
  Mlp<double> net({2, 1});
  net.weights()[0] << 0.5, -0.25;
  auto g = net.zero_gradients();
  g.weights[0] << 0.3, -2.0;
  g.biases[0] << 1e-3;
  AdamConfig cfg;
  AdamState<double> st;
  adam_step(net, g, st, cfg);
  // m̂ = g, v̂ = g², step = lr g / (|g| + eps).
  auto expect = [&](double p0, double gi) {
    return p0 - cfg.learning_rate * gi / (std::abs(gi) + cfg.epsilon);
  };
  EXPECT_NEAR(net.weights()[0](0, 0), expect(0.5, 0.3), 1e-15);
  EXPECT_NEAR(net.weights()[0](0, 1), expect(-0.25, -2.0), 1e-15);
  EXPECT_NEAR(net.biases()[0](0), expect(0.0, 1e-3), 1e-15);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, ConstantGradientDescends) {
  Mlp<double> net({1, 1});
  auto g = net.zero_gradients();
  g.weights[0] << 2.0;
  g.biases[0] << -1.0;
  AdamState<double> st;
  double w = 0, b = 0;
  for (int i = 0; i < 100; ++i) {
    adam_step(net, g, st);
    ASSERT_LT(net.weights()[0](0, 0), w);
    ASSERT_GT(net.biases()[0](0), b);
    w = net.weights()[0](0, 0);
    b = net.biases()[0](0);
  }
}

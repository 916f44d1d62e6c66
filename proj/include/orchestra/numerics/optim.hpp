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

#include <cmath>

#include "orchestra/numerics/mlp.hpp"

namespace orchestra {

inline constexpr double kDefaultGradientClip = 5.0;

/// Rescales g so its global L2 norm does not exceed tau.
template <typename Scalar>
ParameterGradients<Scalar> clip_gradient(ParameterGradients<Scalar> g,
                                         double tau = kDefaultGradientClip) {
  if (!(tau > 0.0)) throw ContractError("clip_gradient: tau must be positive");
  const double n = g.norm();
  if (n > tau) g *= static_cast<Scalar>(tau / n);
  return g;
}

/// Vector form of clip_gradient.
template <typename Derived>
VectorX<typename Derived::Scalar> clip_norm(const Eigen::MatrixBase<Derived>& g,
                                            double tau = kDefaultGradientClip) {
  if (!(tau > 0.0)) throw ContractError("clip_norm: tau must be positive");
  VectorX<typename Derived::Scalar> out = g;
  const double n = out.template cast<double>().norm();
  if (n > tau) out *= static_cast<typename Derived::Scalar>(tau / n);
  return out;
}

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  ParameterGradients<Scalar> first;
  ParameterGradients<Scalar> second;
  long step = 0;

  static AdamState for_network(const Mlp<Scalar>& net) {
    return AdamState{net.zero_gradients(), net.zero_gradients(), 0};
  }
};

/// One bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(Mlp<Scalar>& net, const ParameterGradients<Scalar>& g, AdamState<Scalar>& state,
               const AdamConfig& cfg = {}) {
  if (state.first.weights.size() != net.layer_count()) state = AdamState<Scalar>::for_network(net);
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  const auto one = Scalar(1);
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = b1 * m + (one - b1) * grad;
    v = b2 * v + (one - b2) * grad.cwiseAbs2();
    const auto mhat = m.array() / static_cast<Scalar>(c1);
    const auto vhat = v.array() / static_cast<Scalar>(c2);
    param.array() -= static_cast<Scalar>(cfg.learning_rate) * mhat /
                     (vhat.sqrt() + static_cast<Scalar>(cfg.epsilon));
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    update(net.weights()[l], g.weights[l], state.first.weights[l], state.second.weights[l]);
    update(net.biases()[l], g.biases[l], state.first.biases[l], state.second.biases[l]);
  }
}

}  // namespace orchestra

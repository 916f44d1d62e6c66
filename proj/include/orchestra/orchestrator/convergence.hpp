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

#include <functional>
#include <optional>
#include <vector>

#include "orchestra/numerics/dense.hpp"
#include "orchestra/numerics/random.hpp"
#include "orchestra/state/agent_state.hpp"

namespace orchestra {

/// Calibrated once on seeds disjoint from the acceptance seeds, then frozen:
/// the harness must reach eps within kConvergenceK / (alpha eps) ticks.
inline constexpr double kConvergenceK = 0.02;

struct ConvergenceVerdict {
  std::vector<double> lyapunov;      // V at every tick of the trace
  bool monotone = true;              // V never increased
  std::optional<std::size_t> first_increase;
  std::optional<std::size_t> converged_tick;  // first tick with V <= eps
  double bound_ticks = 0.0;          // K / (alpha eps)
  bool within_bound = false;
  bool rate_condition = false;       // alpha < 1 / (2 L)
};

/// Checks a trace of global states against V = 0.5 |phi - phi*|^2.
ConvergenceVerdict verify_convergence(const std::vector<GlobalState>& trace, const Vector& phi_star,
                                      double alpha, double lipschitz, double eps = 1e-3,
                                      double k = kConvergenceK);
ConvergenceVerdict verify_convergence(const std::vector<Vector>& trace, const Vector& phi_star,
                                      double alpha, double lipschitz, double eps = 1e-3,
                                      double k = kConvergenceK);

struct LipschitzOptions {
  int perturbations = 8;  // local probes per sample
  double radius = 1e-3;   // relative to the sample norm (absolute when zero)
};

/// max |f(x) - f(y)| / |x - y| over all sample pairs and random local
/// perturbations. An empirical lower bound on the true constant.
double estimate_lipschitz(const std::function<Vector(const Vector&)>& f,
                          const std::vector<Vector>& samples, RandomStream& rng,
                          const LipschitzOptions& opts = {});

/// Linear test dynamics x <- x - 2 alpha A (x - x*) with A symmetric
/// positive definite. The field x -> A (x - x*) has Lipschitz constant
/// lambda_max(A); the iteration contracts iff alpha < 1 / lambda_max, and
/// V decreases monotonically for alpha < 1 / (2 L).
struct ContractionHarness {
  Matrix a;
  Vector target;

  /// Random eigenbasis; top eigenvalue exactly lipschitz, the rest uniform
  /// in [0.2, 1] * lipschitz.
  static ContractionHarness random(int dim, RandomStream& rng, double lipschitz = 1.0);

  Vector field(const Vector& x) const { return a * (x - target); }
  Vector step(const Vector& x, double alpha) const { return x - 2.0 * alpha * field(x); }
  /// States x_0 .. x_ticks.
  std::vector<Vector> run(Vector x0, double alpha, int ticks) const;
};

}  // namespace orchestra

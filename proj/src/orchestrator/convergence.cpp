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
#include "orchestra/orchestrator/convergence.hpp"

#include <Eigen/QR>
#include <algorithm>

#include "orchestra/error.hpp"

namespace orchestra {

namespace {

ConvergenceVerdict verdict(std::vector<double> v, double alpha, double lipschitz, double eps,
                           double k) {
  if (v.size() < 2) throw ContractError("verify_convergence: trace needs at least two states");
  if (!(alpha > 0.0) || !(eps > 0.0)) throw ContractError("verify_convergence: alpha and eps must be positive");
  ConvergenceVerdict out;
  out.rate_condition = lipschitz > 0.0 && alpha < 1.0 / (2.0 * lipschitz);
  for (std::size_t t = 1; t < v.size(); ++t) {
    // Relative slack absorbs rounding once the iterate has collapsed.
    if (v[t] > v[t - 1] * (1.0 + 1e-12) + 1e-300) {
      out.monotone = false;
      out.first_increase = t;
      break;
    }
  }
  for (std::size_t t = 0; t < v.size(); ++t)
    if (v[t] <= eps) {
      out.converged_tick = t;
      break;
    }
  out.bound_ticks = k / (alpha * eps);
  out.within_bound = out.converged_tick && static_cast<double>(*out.converged_tick) <= out.bound_ticks;
  out.lyapunov = std::move(v);
  return out;
}

}  // namespace

ConvergenceVerdict verify_convergence(const std::vector<GlobalState>& trace, const Vector& phi_star,
                                      double alpha, double lipschitz, double eps, double k) {
  std::vector<double> v;
  v.reserve(trace.size());
  for (const auto& g : trace) v.push_back(lyapunov(g.phi, phi_star));
  return verdict(std::move(v), alpha, lipschitz, eps, k);
}

ConvergenceVerdict verify_convergence(const std::vector<Vector>& trace, const Vector& phi_star,
                                      double alpha, double lipschitz, double eps, double k) {
  std::vector<double> v;
  v.reserve(trace.size());
  for (const auto& x : trace) v.push_back(lyapunov(x, phi_star));
  return verdict(std::move(v), alpha, lipschitz, eps, k);
}

double estimate_lipschitz(const std::function<Vector(const Vector&)>& f,
                          const std::vector<Vector>& samples, RandomStream& rng,
                          const LipschitzOptions& opts) {
  if (samples.size() < 2) throw ContractError("estimate_lipschitz: need at least two samples");
  std::vector<Vector> images;
  images.reserve(samples.size());
  for (const auto& x : samples) images.push_back(f(x));

  double best = 0.0;
  auto consider = [&](const Vector& x, const Vector& fx, const Vector& y, const Vector& fy) {
    const double d = (x - y).norm();
    if (d > 0.0) best = std::max(best, (fx - fy).norm() / d);
  };
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j)
      consider(samples[i], images[i], samples[j], images[j]);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double scale = samples[i].norm() > 0.0 ? samples[i].norm() : 1.0;
    for (int p = 0; p < opts.perturbations; ++p) {
      Vector d = rng.normal_vector(samples[i].size());
      d *= opts.radius * scale / d.norm();
      const Vector y = samples[i] + d;
      consider(samples[i], images[i], y, f(y));
    }
  }
  return best;
}

ContractionHarness ContractionHarness::random(int dim, RandomStream& rng, double lipschitz) {
  if (dim < 1) throw ContractError("ContractionHarness: dim must be >= 1");
  Matrix g(dim, dim);
  rng.fill_normal(g);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector eig(dim);
  eig(0) = lipschitz;
  for (int i = 1; i < dim; ++i) eig(i) = rng.uniform(0.2, 1.0) * lipschitz;
  ContractionHarness h;
  h.a = q * eig.asDiagonal() * q.transpose();
  h.a = 0.5 * (h.a + h.a.transpose());
  h.target = rng.normal_vector(dim);
  return h;
}

std::vector<Vector> ContractionHarness::run(Vector x, double alpha, int ticks) const {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(ticks) + 1);
  out.push_back(x);
  for (int t = 0; t < ticks; ++t) {
    x = step(x, alpha);
    out.push_back(x);
  }
  return out;
}

}  // namespace orchestra

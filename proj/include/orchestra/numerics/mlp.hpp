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
#include <cstddef>
#include <optional>
#include <vector>

#include "orchestra/numerics/dense.hpp"
#include "orchestra/numerics/random.hpp"

namespace orchestra {

template <typename Scalar>
struct ParameterGradients {
  std::vector<MatrixX<Scalar>> weights;
  std::vector<VectorX<Scalar>> biases;

  double squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights) s += w.template cast<double>().squaredNorm();
    for (const auto& b : biases) s += b.template cast<double>().squaredNorm();
    return s;
  }
  double norm() const { return std::sqrt(squared_norm()); }

  ParameterGradients& operator*=(Scalar s) {
    for (auto& w : weights) w *= s;
    for (auto& b : biases) b *= s;
    return *this;
  }

  ParameterGradients& operator+=(const ParameterGradients& o) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] += o.weights[l];
      biases[l] += o.biases[l];
    }
    return *this;
  }

  bool is_zero() const {
    for (const auto& w : weights)
      if (!w.isZero(0)) return false;
    for (const auto& b : biases)
      if (!b.isZero(0)) return false;
    return true;
  }
};

/// Activations recorded by a forward pass. Columns are samples.
template <typename Scalar>
struct ForwardCache {
  std::vector<MatrixX<Scalar>> activations;  // activations[0] is the input
  std::vector<MatrixX<Scalar>> preactivations;
};

/// Fully connected network with rectified-linear hidden layers and an
/// identity output layer.
template <typename Scalar>
class Mlp {
 public:
  using Mat = MatrixX<Scalar>;
  using Vec = VectorX<Scalar>;

  struct Backward {
    ParameterGradients<Scalar> grads;
    Mat input_grad;
  };

  Mlp() = default;

  /// Zero-initialized network with the given layer widths (input first).
  explicit Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw ShapeError("Mlp: need at least input and output layers");
    for (int s : sizes_)
      if (s <= 0) throw ShapeError("Mlp: layer widths must be positive");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.push_back(Mat::Zero(sizes_[l + 1], sizes_[l]));
      biases_.push_back(Vec::Zero(sizes_[l + 1]));
    }
  }

  /// The transition architecture: [input, 256, 128, output].
  static Mlp transition(int input_dim, int output_dim, int hidden1 = 256, int hidden2 = 128) {
    return Mlp({input_dim, hidden1, hidden2, output_dim});
  }

  /// He-normal weights, zero biases.
  void initialize(RandomStream& rng, double output_gain = 1.0) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double fan_in = static_cast<double>(weights_[l].cols());
      double scale = std::sqrt(2.0 / fan_in);
      if (l + 1 == weights_.size()) scale *= output_gain / std::sqrt(2.0);
      rng.fill_normal(weights_[l]);
      weights_[l] *= static_cast<Scalar>(scale);
      biases_[l].setZero();
    }
  }

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t layer_count() const { return weights_.size(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  std::vector<Mat>& weights() { return weights_; }
  const std::vector<Mat>& weights() const { return weights_; }
  std::vector<Vec>& biases() { return biases_; }
  const std::vector<Vec>& biases() const { return biases_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    return n;
  }

  /// Batched forward pass recording activations into cache.
  Mat forward(const Mat& x, ForwardCache<Scalar>& cache) const {
    if (x.rows() != input_dim())
      throw ShapeError("Mlp::forward: input has " + std::to_string(x.rows()) +
                       " rows, expected " + std::to_string(input_dim()));
    cache.activations.assign(1, x);
    cache.preactivations.clear();
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Mat z = weights_[l] * cache.activations.back();
      z.colwise() += biases_[l];
      cache.preactivations.push_back(z);
      if (l + 1 < weights_.size())
        cache.activations.push_back(z.cwiseMax(Scalar(0)));
      else
        cache.activations.push_back(std::move(z));
    }
    return cache.activations.back();
  }

  /// Forward pass that keeps its activations for a later backward().
  Vec forward(const Vec& x) {
    cache_.emplace();
    return forward(Mat(x), *cache_).col(0);
  }

  Vec predict(const Vec& x) const {
    ForwardCache<Scalar> c;
    return forward(Mat(x), c).col(0);
  }

  Mat predict(const Mat& x) const {
    ForwardCache<Scalar> c;
    return forward(x, c);
  }

  /// Backpropagates dLoss/dOutput (one column per cached sample). Parameter
  /// gradients are summed over the batch.
  Backward backward(const ForwardCache<Scalar>& cache, const Mat& loss_grad) const {
    if (cache.activations.size() != weights_.size() + 1)
      throw StateError("Mlp::backward: cache does not hold a forward pass of this network");
    if (loss_grad.rows() != output_dim() || loss_grad.cols() != cache.activations[0].cols())
      throw ShapeError("Mlp::backward: loss gradient shape does not match output");
    Backward out;
    out.grads.weights.resize(weights_.size());
    out.grads.biases.resize(weights_.size());
    Mat delta = loss_grad;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      out.grads.weights[l].noalias() = delta * cache.activations[l].transpose();
      out.grads.biases[l] = delta.rowwise().sum();
      Mat upstream = weights_[l].transpose() * delta;
      if (l > 0) {
        const Mat& z = cache.preactivations[l - 1];
        upstream = (z.array() > Scalar(0)).select(upstream, Scalar(0));
      }
      delta = std::move(upstream);
    }
    out.input_grad = std::move(delta);
    return out;
  }

  /// Backward pass against the activations recorded by forward(Vec).
  ParameterGradients<Scalar> backward(const Vec& loss_grad) {
    if (!cache_) throw StateError("Mlp::backward called without a prior forward pass");
    return backward(*cache_, Mat(loss_grad)).grads;
  }

  /// Gradient of <output_weights, f(x)> with respect to x.
  Vec input_gradient(const Vec& x, const Vec& output_weights) const {
    ForwardCache<Scalar> c;
    forward(Mat(x), c);
    return backward(c, Mat(output_weights)).input_grad.col(0);
  }

  ParameterGradients<Scalar> zero_gradients() const {
    ParameterGradients<Scalar> g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.weights.push_back(Mat::Zero(weights_[l].rows(), weights_[l].cols()));
      g.biases.push_back(Vec::Zero(biases_[l].size()));
    }
    return g;
  }

  /// Parameter by flat index: each layer's weights (column-major), then its bias.
  Scalar& parameter(std::size_t index) { return locate(weights_, biases_, index); }

  static Scalar& locate(std::vector<Mat>& w, std::vector<Vec>& b, std::size_t index) {
    for (std::size_t l = 0; l < w.size(); ++l) {
      const auto nw = static_cast<std::size_t>(w[l].size());
      if (index < nw) return w[l].data()[index];
      index -= nw;
      const auto nb = static_cast<std::size_t>(b[l].size());
      if (index < nb) return b[l].data()[index];
      index -= nb;
    }
    throw ShapeError("Mlp: parameter index out of range");
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.sizes_ == b.sizes_ && a.weights_ == b.weights_ && a.biases_ == b.biases_;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Mat> weights_;
  std::vector<Vec> biases_;
  std::optional<ForwardCache<Scalar>> cache_;
};

template <typename Scalar>
Scalar gradient_entry(ParameterGradients<Scalar>& g, std::size_t index) {
  return Mlp<Scalar>::locate(g.weights, g.biases, index);
}

struct FiniteDiffOptions {
  /// Number of parameters to probe; 0 probes every parameter.
  std::size_t sample = 0;
  std::uint64_t seed = 0;
};

/// Compares backprop against central differences of L = 0.5 * |f(x)|^2.
/// Returns max |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
inline double finite_diff_check(const Mlp<double>& net, const Vector& x, double eps,
                                FiniteDiffOptions options = {}) {
  if (!(eps > 0.0)) throw ContractError("finite_diff_check: eps must be positive");
  Mlp<double> probe = net;
  const auto loss = [&](const Mlp<double>& m) { return 0.5 * m.predict(x).squaredNorm(); };

  ForwardCache<double> cache;
  const Matrix out = probe.forward(Matrix(x), cache);
  auto grads = probe.backward(cache, out).grads;

  const std::size_t count = probe.parameter_count();
  std::vector<std::size_t> indices;
  if (options.sample == 0 || options.sample >= count) {
    indices.resize(count);
    for (std::size_t i = 0; i < count; ++i) indices[i] = i;
  } else {
    RandomStream rng(options.seed, 0xFD);
    for (std::size_t k = 0; k < options.sample; ++k) indices.push_back(rng.below(count));
  }

  double worst = 0.0;
  for (std::size_t i : indices) {
    double& p = probe.parameter(i);
    const double saved = p;
    p = saved + eps;
    const double up = loss(probe);
    p = saved - eps;
    const double down = loss(probe);
    p = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = gradient_entry(grads, i);
    const double err =
        std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace orchestra

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
#include <span>
#include <string_view>

#include "orchestra/numerics/dense.hpp"

namespace orchestra {

/// Counter-based random stream. Every draw is a pure function of
/// (key, counter), so the stream is reproducible across platforms and a
/// stream can be forked for a worker without consuming draws from the parent.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0, std::uint64_t stream = 0);

  /// Rebuilds a stream from its serialized position.
  static RandomStream from_state(std::uint64_t key, std::uint64_t counter);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal (Box-Muller, one value per two uniforms).
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  /// Index drawn with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights);

  /// Independent child stream; does not advance this stream.
  [[nodiscard]] RandomStream fork(std::uint64_t stream_id) const;

  template <typename Derived>
  void fill_normal(Eigen::DenseBase<Derived>& out) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i)
        out(i, j) = static_cast<typename Derived::Scalar>(normal());
  }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    fill_normal(v);
    return v;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer; also used as a general-purpose 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic 64-bit hash of a byte string (FNV-1a followed by mix64).
std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed = 0);

}  // namespace orchestra

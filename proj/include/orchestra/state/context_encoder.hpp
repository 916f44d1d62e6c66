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
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "orchestra/numerics/dense.hpp"

namespace orchestra {

/// Frozen random projection of the token vocabulary: every token maps to a
/// seeded Gaussian vector with entries of variance 1/dim. Thread-safe.
class TokenEmbedder {
 public:
  explicit TokenEmbedder(int dim = 768, std::uint64_t seed = 0x5eed);

  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  const Vector& embed(std::string_view token) const;
  /// Sum of token embeddings.
  Vector encode(const std::vector<std::string>& tokens) const;

 private:
  int dim_;
  std::uint64_t seed_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::string, std::unique_ptr<Vector>> cache_;
};

/// Sliding window over the most recent turns. The running sum is maintained
/// incrementally, so perturbations applied to it (handoff drift) persist after
/// the turns they touched are evicted.
class ContextWindow {
 public:
  explicit ContextWindow(int dim = 768, int capacity = 20);

  void push(const Vector& turn);
  const Vector& sum() const { return sum_; }
  void set_sum(Vector v);

  int dim() const { return static_cast<int>(sum_.size()); }
  int capacity() const { return capacity_; }
  std::size_t size() const { return turns_.size(); }

  /// Unit-norm summary (zero while empty).
  Vector summary() const;

 private:
  int capacity_;
  std::deque<Vector> turns_;
  Vector sum_;
};

}  // namespace orchestra

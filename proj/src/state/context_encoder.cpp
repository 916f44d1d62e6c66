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
#include "orchestra/state/context_encoder.hpp"

#include <cmath>
#include <mutex>

#include "orchestra/numerics/random.hpp"

namespace orchestra {

TokenEmbedder::TokenEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim <= 0) throw ConfigError("TokenEmbedder: dimension must be positive");
}

const Vector& TokenEmbedder::embed(std::string_view token) const {
  {
    std::shared_lock lock(mu_);
    auto it = cache_.find(std::string(token));
    if (it != cache_.end()) return *it->second;
  }
  RandomStream rng(hash_bytes(token, seed_));
  auto v = std::make_unique<Vector>(rng.normal_vector(dim_) / std::sqrt(static_cast<double>(dim_)));
  std::unique_lock lock(mu_);
  auto [it, inserted] = cache_.try_emplace(std::string(token), std::move(v));
  return *it->second;
}

Vector TokenEmbedder::encode(const std::vector<std::string>& tokens) const {
  Vector out = Vector::Zero(dim_);
  for (const auto& t : tokens) out += embed(t);
  return out;
}

ContextWindow::ContextWindow(int dim, int capacity) : capacity_(capacity), sum_(Vector::Zero(dim)) {
  if (capacity <= 0) throw ConfigError("ContextWindow: capacity must be positive");
}

void ContextWindow::push(const Vector& turn) {
  require_same_size(turn, sum_, "ContextWindow::push");
  sum_ += turn;
  turns_.push_back(turn);
  if (static_cast<int>(turns_.size()) > capacity_) {
    sum_ -= turns_.front();
    turns_.pop_front();
  }
}

void ContextWindow::set_sum(Vector v) {
  require_same_size(v, sum_, "ContextWindow::set_sum");
  sum_ = std::move(v);
}

Vector ContextWindow::summary() const {
  const double n = sum_.norm();
  if (n == 0.0) return Vector::Zero(sum_.size());
  return sum_ / n;
}

}  // namespace orchestra

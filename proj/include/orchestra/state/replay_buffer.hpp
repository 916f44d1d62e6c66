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

#include <cstddef>
#include <mutex>
#include <vector>

#include "orchestra/error.hpp"
#include "orchestra/numerics/random.hpp"

namespace orchestra {

inline constexpr std::size_t kReplayCapacity = 10000;

/// Fixed-capacity ring; the oldest entry is evicted first.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = kReplayCapacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("ReplayBuffer: capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1024));
  }

  void push(T item) {
    std::lock_guard lock(mu_);
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % capacity_;
    }
    ++total_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  /// Number of pushes ever made.
  std::size_t total_pushed() const { return total_; }

  /// i-th oldest stored entry.
  const T& operator[](std::size_t i) const {
    if (i >= items_.size()) throw ContractError("ReplayBuffer: index out of range");
    return items_[(head_ + i) % items_.size()];
  }

  /// Uniform draw with replacement.
  std::vector<const T*> sample(std::size_t batch, RandomStream& rng) const {
    if (items_.empty()) throw StateError("ReplayBuffer::sample on empty buffer");
    std::vector<const T*> out;
    out.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) out.push_back(&items_[rng.below(items_.size())]);
    return out;
  }

  void clear() {
    items_.clear();
    head_ = 0;
    total_ = 0;
  }

 private:
  std::size_t capacity_;
  std::vector<T> items_;
  std::size_t head_ = 0;
  std::size_t total_ = 0;
  std::mutex mu_;
};

}  // namespace orchestra

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
#include "orchestra/numerics/random.hpp"

#include <cmath>
#include <numbers>

namespace orchestra {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ULL ^ mix64(seed);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix64(h);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

RandomStream RandomStream::from_state(std::uint64_t key, std::uint64_t counter) {
  RandomStream s;
  s.key_ = key;
  s.counter_ = counter;
  return s;
}

std::uint64_t RandomStream::next_u64() {
  // Two rounds of the finalizer over key ^ counter behave well as a
  // counter-mode generator for simulation purposes.
  const std::uint64_t c = counter_++;
  return mix64(mix64(key_ ^ (c * 0x9E3779B97F4A7C15ULL)) + key_);
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RandomStream::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n == 0) throw ContractError("RandomStream::below: n must be positive");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

bool RandomStream::bernoulli(double p) { return uniform() < p; }

std::size_t RandomStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ContractError("categorical: negative or NaN weight");
    total += w;
  }
  if (total <= 0.0) throw ContractError("categorical: weights sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  return last_positive;
}

RandomStream RandomStream::fork(std::uint64_t stream_id) const {
  return from_state(mix64(key_ ^ mix64(stream_id + 0x632BE59BD9B4E019ULL)), 0);
}

}  // namespace orchestra

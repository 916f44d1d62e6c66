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
#include "orchestra/metrics/embedding.hpp"

#include <algorithm>
#include <limits>

#include "orchestra/numerics/random.hpp"

namespace orchestra {

Vector embed(const Tokens& tokens, const EmbeddingConfig& cfg) {
  if (cfg.dim <= 0) throw ConfigError("embed: dimension must be positive");
  Vector v = Vector::Zero(cfg.dim);
  const auto bump = [&](std::uint64_t h) {
    // One hash picks the bucket, another bit picks the sign.
    v(static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(cfg.dim))) += (h >> 63) ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::uint64_t hi = hash_bytes(tokens[i], cfg.seed);
    if (cfg.unigrams) bump(mix64(hi));
    if (cfg.bigrams && i + 1 < tokens.size()) {
      const std::uint64_t hj = hash_bytes(tokens[i + 1], cfg.seed);
      bump(mix64(hi ^ mix64(hj + 0x6B)));
    }
  }
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

bool handoff_success(double similarity, bool task_done) {
  return task_done && similarity > kHandoffCosine;
}

bool handoff_success(const Tokens& previous, const Tokens& response, bool task_done,
                     const EmbeddingConfig& cfg) {
  return handoff_success(cosine(embed(previous, cfg), embed(response, cfg)), task_done);
}

bool task_success(const Tokens& final_response, const Tokens& key, double min_adjacent) {
  if (key.empty()) throw ContractError("task_success: conversation has no answer key");
  for (const auto& k : key)
    if (std::find(final_response.begin(), final_response.end(), k) == final_response.end()) return false;
  return !(min_adjacent < kContextBreakCosine);
}

bool task_success(const std::vector<Tokens>& responses, const Tokens& key,
                  const EmbeddingConfig& cfg) {
  if (key.empty()) throw ContractError("task_success: conversation has no answer key");
  if (responses.empty()) return false;
  double min_cos = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < responses.size(); ++i)
    min_cos = std::min(min_cos, cosine(embed(responses[i - 1], cfg), embed(responses[i], cfg)));
  return task_success(responses.back(), key, min_cos);
}

}  // namespace orchestra

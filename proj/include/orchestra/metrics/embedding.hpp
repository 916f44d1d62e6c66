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

#include "orchestra/metrics/rouge.hpp"
#include "orchestra/numerics/dense.hpp"

namespace orchestra {

struct EmbeddingConfig {
  int dim = 256;
  bool bigrams = true;
  bool unigrams = true;
  std::uint64_t seed = 0xE3BD;
};

/// Hashed bag of unigrams and bigrams, L2-normalized; empty input gives the
/// zero vector. With bigrams off the result is permutation invariant.
Vector embed(const Tokens& tokens, const EmbeddingConfig& cfg = {});

/// cosine(embed(prev), embed(response)) > 0.7 and the task was done.
bool handoff_success(const Tokens& previous, const Tokens& response, bool task_done,
                     const EmbeddingConfig& cfg = {});
bool handoff_success(double similarity, bool task_done);

/// Every answer token appears in the final response and no adjacent pair of
/// responses falls below cosine 0.5. Throws ContractError for an empty key.
bool task_success(const std::vector<Tokens>& responses, const Tokens& answer_key,
                  const EmbeddingConfig& cfg = {});
bool task_success(const Tokens& final_response, const Tokens& answer_key,
                  double min_adjacent_cosine);

inline constexpr double kHandoffCosine = 0.7;
inline constexpr double kContextBreakCosine = 0.5;

}  // namespace orchestra

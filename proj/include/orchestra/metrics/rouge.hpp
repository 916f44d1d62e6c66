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

#include <string>
#include <vector>

namespace orchestra {

using Tokens = std::vector<std::string>;

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// Length of the longest common subsequence (two-row dynamic programme).
std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// LCS-based ROUGE-L; either side empty yields all zeros.
RougeScore rouge_l(const Tokens& candidate, const Tokens& reference);

/// Whitespace split, lowercased.
Tokens tokenize(const std::string& text);

/// Mean ROUGE-L F over (response before, response after) pairs taken at
/// agent transitions; 1.0 when there are none.
double context_score(const std::vector<std::pair<Tokens, Tokens>>& transitions);
double context_score(const std::vector<double>& transition_scores);

}  // namespace orchestra

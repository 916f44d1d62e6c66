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
#include "orchestra/metrics/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace orchestra {

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  if (a.empty() || b.empty()) return 0;
  const Tokens& s = a.size() < b.size() ? a : b;  // shorter one indexes the rows
  const Tokens& l = a.size() < b.size() ? b : a;
  std::vector<std::size_t> prev(s.size() + 1, 0), cur(s.size() + 1, 0);
  for (const auto& x : l) {
    for (std::size_t j = 1; j <= s.size(); ++j)
      cur[j] = x == s[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[s.size()];
}

RougeScore rouge_l(const Tokens& candidate, const Tokens& reference) {
  RougeScore r;
  if (candidate.empty() || reference.empty()) return r;
  const double l = static_cast<double>(lcs_length(candidate, reference));
  r.precision = l / static_cast<double>(candidate.size());
  r.recall = l / static_cast<double>(reference.size());
  if (r.precision + r.recall > 0.0) r.f = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

Tokens tokenize(const std::string& text) {
  Tokens out;
  std::istringstream in(text);
  std::string t;
  while (in >> t) {
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    out.push_back(std::move(t));
  }
  return out;
}

double context_score(const std::vector<std::pair<Tokens, Tokens>>& transitions) {
  std::vector<double> s;
  s.reserve(transitions.size());
  for (const auto& [a, b] : transitions) s.push_back(rouge_l(b, a).f);
  return context_score(s);
}

double context_score(const std::vector<double>& scores) {
  if (scores.empty()) return 1.0;
  double sum = 0.0;
  for (double x : scores) sum += x;
  return sum / static_cast<double>(scores.size());
}

}  // namespace orchestra

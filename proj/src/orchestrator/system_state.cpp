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
#include "orchestra/orchestrator/system_state.hpp"

namespace orchestra {

std::vector<AgentState> SystemState::agent_states() const {
  std::vector<AgentState> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.state);
  return out;
}

std::vector<std::uint32_t> SystemState::live_ids() const {
  std::vector<std::uint32_t> out;
  for (const auto& a : agents)
    if (a.live) out.push_back(a.id());
  return out;
}

std::vector<double> utilization_shares(const SystemState& s) {
  const std::size_t n = s.agents.size();
  std::vector<double> used(n, 0.0);
  for (const auto& row : s.utilization)
    for (std::size_t i = 0; i < n && i < row.size(); ++i)
      if (s.agents[i].live) used[i] += static_cast<double>(row[i]);
  double total = 0.0;
  for (double u : used) total += u;
  std::size_t live = 0;
  for (const auto& a : s.agents) live += a.live ? 1 : 0;
  std::vector<double> w(n, 0.0);
  if (live == 0) return w;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.agents[i].live) continue;
    w[i] = total > 0.0 ? used[i] / total : 1.0 / static_cast<double>(live);
  }
  return w;
}

}  // namespace orchestra

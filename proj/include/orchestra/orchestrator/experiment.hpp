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

#include <map>
#include <string>
#include <vector>

#include "orchestra/metrics/stats.hpp"
#include "orchestra/orchestrator/config.hpp"
#include "orchestra/orchestrator/orchestrator.hpp"

namespace orchestra {

struct WindowAggregate {
  std::size_t start = 0;
  std::size_t count = 0;
  double context_score = 0.0;
  double context_cosine = 0.0;
  double task_success = 0.0;
  double handoff_success = 0.0;
  double latency_mean = 0.0;
  double latency_p95 = 0.0;
};

struct VariantResult {
  Variant variant = Variant::Full;
  int agents = 0;
  std::vector<ConversationRecord> records;
  std::vector<Event> events;
  RunTotals totals;

  // Derived from records (see summarize).
  double context_score = 0.0;
  double context_cosine = 0.0;
  double task_success = 0.0;
  double handoff_success = 0.0;  // successes / handoffs over all conversations
  LatencySummary latency;        // per-turn logical response time
  std::vector<WindowAggregate> windows;
  std::vector<double> probe_mean;  // mean echo score after k handoffs
  std::map<std::string, std::size_t> failures;
  std::vector<double> disagreement;  // per tick
};

/// Fills every derived field of r from r.records.
void summarize(VariantResult& r, std::size_t window);

struct Comparison {
  std::string metric;
  Variant a = Variant::Full;
  Variant b = Variant::NoConsensus;
  std::size_t n_a = 0, n_b = 0;
  StatResult stat;
  bool valid = true;  // false when a sample was degenerate
  bool significant = false;
  std::string note;
};

struct ExperimentReport {
  SimulationConfig config;
  double alpha = bonferroni_alpha();
  std::vector<VariantResult> variants;
  std::vector<Comparison> comparisons;  // full vs each ablation, per metric
  const VariantResult* find(Variant v) const;
};

/// Compares the first variant against every other one.
std::vector<Comparison> compare_variants(const std::vector<VariantResult>& variants, double alpha,
                                         std::uint64_t seed, int resamples);

std::vector<Conversation> make_corpus(const SimulationConfig& cfg);
VariantResult run_variant(const SimulationConfig& cfg, Variant v, const std::vector<Conversation>& corpus);
/// The first variant listed is the reference; validation happens up front.
ExperimentReport run_experiment(const SimulationConfig& cfg,
                                std::vector<Variant> variants = {std::begin(kAllVariants), std::end(kAllVariants)});

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

struct SweepPoint {
  int agents = 0;
  RunTotals totals;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  LinearFit memory_fit;  // peak bytes against agent count
  bool overhead_monotone = true;
};

SweepReport run_sweep(const SimulationConfig& cfg, const std::vector<int>& agent_counts);

}  // namespace orchestra

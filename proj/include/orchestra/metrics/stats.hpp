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

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "orchestra/numerics/random.hpp"

namespace orchestra {

inline constexpr double kFamilyAlpha = 0.05;
inline constexpr int kComparisons = 4;

/// Per-comparison significance level after Bonferroni correction.
constexpr double bonferroni_alpha(double family_alpha = kFamilyAlpha, int comparisons = kComparisons) {
  return family_alpha / comparisons;
}

struct StatResult {
  double mean_difference = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double cohens_d = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> x);

/// Welch's unequal-variance t-test, two-sided. Fills mean_difference, t, df, p.
StatResult welch_t(std::span<const double> a, std::span<const double> b);

/// (mean_a - mean_b) / pooled sd with n - 1 weighting.
double cohens_d(std::span<const double> a, std::span<const double> b);

using Statistic = std::function<double(std::span<const double>)>;

/// Percentile bootstrap interval.
std::pair<double, double> bootstrap_ci(std::span<const double> sample, const Statistic& statistic,
                                       RandomStream& rng, int resamples = 10000, double level = 0.95);

/// Bootstrap interval for a difference of means between two samples.
std::pair<double, double> bootstrap_mean_difference_ci(std::span<const double> a, std::span<const double> b,
                                                       RandomStream& rng, int resamples = 10000,
                                                       double level = 0.95);

/// Full comparison: Welch test, Cohen's d and a bootstrap CI of the mean
/// difference.
StatResult compare(std::span<const double> a, std::span<const double> b, RandomStream& rng,
                   int resamples = 10000);

struct LatencySummary {
  double mean = 0.0;
  double p95 = 0.0;
};

/// Nearest-rank percentile, q in (0, 1].
double percentile_nearest_rank(std::span<const double> x, double q);
LatencySummary latency_summary(std::span<const double> samples);

}  // namespace orchestra

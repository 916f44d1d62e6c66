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
#include "orchestra/metrics/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "orchestra/error.hpp"

namespace orchestra {

double mean(std::span<const double> x) {
  if (x.empty()) throw StatisticsError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw StatisticsError("variance needs at least two observations");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

StatResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw StatisticsError("welch_t: each sample needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  StatResult r;
  r.mean_difference = mean(a) - mean(b);
  if (va + vb == 0.0) throw StatisticsError("welch_t: zero variance in both samples");
  r.t = r.mean_difference / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  if (r.t == 0.0) {
    r.p = 1.0;
  } else {
    const boost::math::students_t dist(r.df);
    r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))), 0.0, 1.0);
  }
  return r;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw StatisticsError("cohens_d: each sample needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
  const double diff = mean(a) - mean(b);
  if (pooled == 0.0) throw StatisticsError("cohens_d: pooled standard deviation is zero");
  return diff / std::sqrt(pooled);
}

namespace {

std::pair<double, double> percentile_interval(std::vector<double> stats, double level) {
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  const auto at = [&](double q) {
    // Linear interpolation between order statistics.
    const double pos = q * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, stats.size() - 1);
    return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  return {at(tail), at(1.0 - tail)};
}

}  // namespace

std::pair<double, double> bootstrap_ci(std::span<const double> sample, const Statistic& statistic,
                                       RandomStream& rng, int resamples, double level) {
  if (sample.empty()) throw StatisticsError("bootstrap_ci: empty sample");
  if (resamples < 1) throw ContractError("bootstrap_ci: resamples must be positive");
  if (!(level > 0.0 && level < 1.0)) throw ContractError("bootstrap_ci: level must be in (0,1)");
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  std::vector<double> buf(sample.size());
  for (auto& s : stats) {
    for (auto& x : buf) x = sample[rng.below(sample.size())];
    s = statistic(buf);
  }
  return percentile_interval(std::move(stats), level);
}

std::pair<double, double> bootstrap_mean_difference_ci(std::span<const double> a, std::span<const double> b,
                                                       RandomStream& rng, int resamples, double level) {
  if (a.empty() || b.empty()) throw StatisticsError("bootstrap: empty sample");
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  for (auto& s : stats) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sa += a[rng.below(a.size())];
    for (std::size_t i = 0; i < b.size(); ++i) sb += b[rng.below(b.size())];
    s = sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
  }
  return percentile_interval(std::move(stats), level);
}

StatResult compare(std::span<const double> a, std::span<const double> b, RandomStream& rng, int resamples) {
  StatResult r = welch_t(a, b);
  r.cohens_d = cohens_d(a, b);
  std::tie(r.ci_lo, r.ci_hi) = bootstrap_mean_difference_ci(a, b, rng, resamples);
  return r;
}

double percentile_nearest_rank(std::span<const double> x, double q) {
  if (x.empty()) throw StatisticsError("percentile of an empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw ContractError("percentile: q must be in (0,1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, s.size());
  return s[rank - 1];
}

LatencySummary latency_summary(std::span<const double> samples) {
  return {mean(samples), percentile_nearest_rank(samples, 0.95)};
}

}  // namespace orchestra

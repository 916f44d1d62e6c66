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
#include "orchestra/orchestrator/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "orchestra/error.hpp"

namespace orchestra {

namespace {

std::vector<double> column(const std::vector<ConversationRecord>& rs, double (*f)(const ConversationRecord&)) {
  std::vector<double> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back(f(r));
  return out;
}

}  // namespace

namespace {

WindowAggregate aggregate(std::span<const ConversationRecord> rs) {
  WindowAggregate w;
  w.count = rs.size();
  if (rs.empty()) return w;
  std::size_t hs = 0, hn = 0;
  std::vector<double> lat;
  for (const auto& c : rs) {
    w.context_score += c.context_score;
    w.context_cosine += c.context_cosine;
    w.task_success += c.task_success ? 1.0 : 0.0;
    hs += c.handoff_successes;
    hn += c.handoffs;
    lat.insert(lat.end(), c.turn_latency_ms.begin(), c.turn_latency_ms.end());
  }
  const double n = static_cast<double>(rs.size());
  w.context_score /= n;
  w.context_cosine /= n;
  w.task_success /= n;
  w.handoff_success = hn ? static_cast<double>(hs) / static_cast<double>(hn) : 0.0;
  if (!lat.empty()) {
    const auto l = latency_summary(lat);
    w.latency_mean = l.mean;
    w.latency_p95 = l.p95;
  }
  return w;
}

}  // namespace

void summarize(VariantResult& r, std::size_t window) {
  const auto& rs = r.records;
  const WindowAggregate all = aggregate(rs);
  r.context_score = all.context_score;
  r.context_cosine = all.context_cosine;
  r.task_success = all.task_success;
  r.handoff_success = all.handoff_success;
  r.latency = {all.latency_mean, all.latency_p95};

  r.windows.clear();
  if (window == 0) window = 1;
  for (std::size_t s = 0; s < rs.size(); s += window) {
    const std::size_t e = std::min(rs.size(), s + window);
    WindowAggregate w = aggregate(std::span(rs).subspan(s, e - s));
    w.start = s;
    r.windows.push_back(w);
  }

  r.probe_mean.clear();
  std::vector<std::size_t> counts;
  for (const auto& c : rs) {
    if (c.probe.size() > r.probe_mean.size()) {
      r.probe_mean.resize(c.probe.size(), 0.0);
      counts.resize(c.probe.size(), 0);
    }
    for (std::size_t k = 0; k < c.probe.size(); ++k) {
      r.probe_mean[k] += c.probe[k];
      ++counts[k];
    }
  }
  for (std::size_t k = 0; k < r.probe_mean.size(); ++k) r.probe_mean[k] /= static_cast<double>(counts[k]);

  r.failures.clear();
  for (const char* cat : {"success", "missing_answer", "context_break", "missing_answer+context_break"})
    r.failures[cat] = 0;
  std::size_t topic = 0, task = 0;
  for (const auto& c : rs) {
    ++r.failures[c.failure_category()];
    topic += c.handoff_topic_failures;
    task += c.handoff_task_failures;
  }
  r.failures["handoff_topic_drift"] = topic;
  r.failures["handoff_task_incomplete"] = task;
}

const VariantResult* ExperimentReport::find(Variant v) const {
  for (const auto& r : variants)
    if (r.variant == v) return &r;
  return nullptr;
}

std::vector<Comparison> compare_variants(const std::vector<VariantResult>& vs, double alpha, std::uint64_t seed,
                                         int resamples) {
  std::vector<Comparison> out;
  if (vs.size() < 2) return out;
  struct Metric {
    const char* name;
    std::vector<double> (*extract)(const VariantResult&);
  };
  static const Metric metrics[] = {
      {"context_score",
       [](const VariantResult& v) { return column(v.records, [](const ConversationRecord& c) { return c.context_score; }); }},
      {"context_cosine",
       [](const VariantResult& v) { return column(v.records, [](const ConversationRecord& c) { return c.context_cosine; }); }},
      {"task_success",
       [](const VariantResult& v) {
         return column(v.records, [](const ConversationRecord& c) { return c.task_success ? 1.0 : 0.0; });
       }},
      {"latency_ms",
       [](const VariantResult& v) { return column(v.records, [](const ConversationRecord& c) { return c.latency_ms; }); }},
  };
  const VariantResult& ref = vs.front();
  std::uint64_t stream = 0;
  auto add = [&](std::string name, const VariantResult& other, const std::vector<double>& a,
                 const std::vector<double>& b) {
    Comparison c;
    c.metric = std::move(name);
    c.a = ref.variant;
    c.b = other.variant;
    c.n_a = a.size();
    c.n_b = b.size();
    RandomStream rng(seed ^ 0xb007, ++stream);
    try {
      c.stat = compare(a, b, rng, resamples);
      c.significant = c.stat.p < alpha;
    } catch (const Error& e) {
      c.valid = false;
      c.note = e.what();
      if (!a.empty() && !b.empty()) c.stat.mean_difference = mean(a) - mean(b);
    }
    out.push_back(std::move(c));
  };
  for (std::size_t i = 1; i < vs.size(); ++i) {
    for (const auto& m : metrics) add(m.name, vs[i], m.extract(ref), m.extract(vs[i]));
    // Context-vs-handoff curve, one comparison per handoff count.
    std::size_t depth = 0;
    for (const auto& c : ref.records) depth = std::max(depth, c.probe.size());
    for (std::size_t k = 1; k < depth; ++k) {
      auto probe_k = [k](const VariantResult& v) {
        std::vector<double> x;
        for (const auto& c : v.records)
          if (k < c.probe.size()) x.push_back(c.probe[k]);
        return x;
      };
      add(fmt::format("probe_{}", k), vs[i], probe_k(ref), probe_k(vs[i]));
    }
  }
  return out;
}

std::vector<Conversation> make_corpus(const SimulationConfig& cfg) {
  GeneratorConfig g = cfg.generator;
  if (!cfg.grammar_path.empty() && !g.grammar) g.grammar = std::make_shared<const Grammar>(Grammar::load(cfg.grammar_path));
  if (cfg.direct_fsm) g.transitions = direct_transitions();
  return generate_corpus(cfg.corpus_size, cfg.seed, g);
}

VariantResult run_variant(const SimulationConfig& base, Variant v, const std::vector<Conversation>& corpus) {
  SimulationConfig cfg = base;
  cfg.variant = v;
  if (!cfg.checkpoint_dir.empty()) cfg.checkpoint_dir += "/" + std::string(to_string(v));
  Orchestrator o(cfg, cfg.generator.grammar);
  o.run(corpus);
  VariantResult r;
  r.variant = v;
  r.agents = cfg.agents;
  r.records = o.records();
  r.events = o.events();
  r.totals = o.totals();
  for (const auto& t : o.ticks()) r.disagreement.push_back(t.disagreement);
  summarize(r, static_cast<std::size_t>(cfg.sliding_window));
  return r;
}

ExperimentReport run_experiment(const SimulationConfig& cfg, std::vector<Variant> variants) {
  auto errs = cfg.validate();
  if (cfg.agents < 1) errs.push_back("run.agents must be >= 1 for an experiment");
  if (variants.empty()) errs.push_back("at least one variant is required");
  if (!errs.empty()) {
    std::string msg = "invalid experiment configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  ExperimentReport rep;
  rep.config = cfg;
  const auto corpus = make_corpus(cfg);
  for (Variant v : variants) rep.variants.push_back(run_variant(cfg, v, corpus));
  rep.comparisons = compare_variants(rep.variants, rep.alpha, cfg.seed, cfg.bootstrap_resamples);
  return rep;
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("fit_linear: need two or more paired points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ContractError("fit_linear: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

SweepReport run_sweep(const SimulationConfig& base, const std::vector<int>& counts) {
  auto errs = base.validate();
  for (int n : counts)
    if (n < 1) errs.push_back(fmt::format("sweep agent count {} must be >= 1", n));
  if (counts.size() < 2) errs.push_back("sweep needs at least two agent counts");
  if (!errs.empty()) {
    std::string msg = "invalid sweep configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  SweepReport rep;
  const auto corpus = make_corpus(base);
  std::vector<double> xs, ys;
  for (int n : counts) {
    SimulationConfig cfg = base;
    cfg.agents = n;
    cfg.probe_handoffs = 0;
    Orchestrator o(cfg, cfg.generator.grammar);
    o.run(corpus);
    rep.points.push_back({n, o.totals()});
    xs.push_back(n);
    ys.push_back(static_cast<double>(o.totals().peak_memory_bytes));
  }
  rep.memory_fit = fit_linear(xs, ys);
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return counts[a] < counts[b]; });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (rep.points[order[i]].totals.overhead_fraction() < rep.points[order[i - 1]].totals.overhead_fraction())
      rep.overhead_monotone = false;
  return rep;
}

}  // namespace orchestra

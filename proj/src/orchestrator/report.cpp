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
#include "orchestra/orchestrator/report.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>

#include "orchestra/error.hpp"
#include "orchestra/persistence/corpus_io.hpp"

namespace orchestra {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kTimeNote = "# latency columns are logical milliseconds; 1 tick = 100 ms\n";

std::string num(double v) { return fmt::format("{:.10g}", v); }

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw PersistenceError(PersistenceError::Kind::Io, fmt::format("cannot write {}", p.string()));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw PersistenceError(PersistenceError::Kind::Io, fmt::format("cannot read {}", p.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json totals_json(const RunTotals& t) {
  return {{"ticks", t.ticks},
          {"consensus_rounds", t.consensus_rounds},
          {"rollbacks", t.rollbacks},
          {"violations", t.violations},
          {"consensus_ms", t.consensus_ms},
          {"routing_ms", t.routing_ms},
          {"processing_ms", t.processing_ms},
          {"peak_memory_bytes", t.peak_memory_bytes},
          {"max_applied_gradient", t.max_applied_gradient}};
}

RunTotals totals_from(const json& j) {
  RunTotals t;
  try {
    t.ticks = j.at("ticks").get<std::uint64_t>();
    t.consensus_rounds = j.at("consensus_rounds").get<std::size_t>();
    t.rollbacks = j.at("rollbacks").get<std::size_t>();
    t.violations = j.at("violations").get<std::size_t>();
    t.consensus_ms = j.at("consensus_ms").get<double>();
    t.routing_ms = j.at("routing_ms").get<double>();
    t.processing_ms = j.at("processing_ms").get<double>();
    t.peak_memory_bytes = j.at("peak_memory_bytes").get<std::size_t>();
    t.max_applied_gradient = j.at("max_applied_gradient").get<double>();
  } catch (const json::exception& e) {
    throw PersistenceError(PersistenceError::Kind::Parse, fmt::format("totals: {}", e.what()));
  }
  return t;
}

}  // namespace

std::string summary_csv(const ExperimentReport& rep) {
  std::string s = kTimeNote;
  s += "variant,agents,conversations,context_score,context_cosine,task_success,handoff_success,"
       "latency_mean_ms,latency_p95_ms,ticks,consensus_rounds,rollbacks,violations,peak_memory_bytes,"
       "overhead_fraction,bonferroni_alpha\n";
  for (const auto& v : rep.variants)
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(v.variant), v.agents,
                     v.records.size(), num(v.context_score), num(v.context_cosine), num(v.task_success),
                     num(v.handoff_success), num(v.latency.mean), num(v.latency.p95), v.totals.ticks,
                     v.totals.consensus_rounds, v.totals.rollbacks, v.totals.violations, v.totals.peak_memory_bytes,
                     num(v.totals.overhead_fraction()), num(rep.alpha));
  return s;
}

std::string windows_csv(const ExperimentReport& rep) {
  std::string s = kTimeNote;
  s += "variant,window,first_conversation,conversations,context_score,context_cosine,task_success,"
       "handoff_success,latency_mean_ms,latency_p95_ms\n";
  for (const auto& v : rep.variants)
    for (std::size_t i = 0; i < v.windows.size(); ++i) {
      const auto& w = v.windows[i];
      s += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(v.variant), i, w.start, w.count,
                       num(w.context_score), num(w.context_cosine), num(w.task_success), num(w.handoff_success),
                       num(w.latency_mean), num(w.latency_p95));
    }
  return s;
}

std::string handoff_curve_csv(const ExperimentReport& rep) {
  std::string s = "variant,handoffs,mean_context_score,conversations\n";
  for (const auto& v : rep.variants)
    for (std::size_t k = 0; k < v.probe_mean.size(); ++k) {
      std::size_t n = 0;
      for (const auto& c : v.records) n += k < c.probe.size() ? 1 : 0;
      s += fmt::format("{},{},{},{}\n", to_string(v.variant), k, num(v.probe_mean[k]), n);
    }
  return s;
}

std::string failures_csv(const ExperimentReport& rep) {
  std::string s = "variant,category,count\n";
  for (const auto& v : rep.variants)
    for (const auto& [cat, n] : v.failures) s += fmt::format("{},{},{}\n", to_string(v.variant), cat, n);
  return s;
}

std::string stats_csv(const ExperimentReport& rep) {
  std::string s = fmt::format("# bonferroni_alpha={}\n", num(rep.alpha));
  s += "metric,variant_a,variant_b,n_a,n_b,mean_difference,t,df,p,cohens_d,ci_lo,ci_hi,alpha,significant,valid,note\n";
  for (const auto& c : rep.comparisons)
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", c.metric, to_string(c.a), to_string(c.b),
                     c.n_a, c.n_b, num(c.stat.mean_difference), num(c.stat.t), num(c.stat.df), num(c.stat.p),
                     num(c.stat.cohens_d), num(c.stat.ci_lo), num(c.stat.ci_hi), num(rep.alpha),
                     c.significant ? 1 : 0, c.valid ? 1 : 0, quote(c.note));
  return s;
}

std::string events_csv(const ExperimentReport& rep) {
  std::string s = "variant,tick,kind,detail\n";
  for (const auto& v : rep.variants)
    for (const auto& e : v.events)
      s += fmt::format("{},{},{},{}\n", to_string(v.variant), e.tick, e.kind, quote(e.detail));
  return s;
}

std::string sweep_csv(const SweepReport& rep) {
  std::string s = kTimeNote;
  s += "agents,ticks,peak_memory_bytes,consensus_ms,routing_ms,processing_ms,overhead_fraction,rollbacks\n";
  for (const auto& p : rep.points)
    s += fmt::format("{},{},{},{},{},{},{},{}\n", p.agents, p.totals.ticks, p.totals.peak_memory_bytes,
                     num(p.totals.consensus_ms), num(p.totals.routing_ms), num(p.totals.processing_ms),
                     num(p.totals.overhead_fraction()), p.totals.rollbacks);
  s += fmt::format("# memory_fit intercept={} slope={} r2={} overhead_monotone={}\n", num(rep.memory_fit.intercept),
                   num(rep.memory_fit.slope), num(rep.memory_fit.r2), rep.overhead_monotone ? "true" : "false");
  return s;
}

void write_report(const ExperimentReport& rep, const std::string& dir) {
  const fs::path d(dir);
  fs::create_directories(d);
  write_file(d / "config.ini", dump_config(rep.config));
  write_file(d / "summary.csv", summary_csv(rep));
  write_file(d / "windows.csv", windows_csv(rep));
  write_file(d / "handoff_curve.csv", handoff_curve_csv(rep));
  write_file(d / "failures.csv", failures_csv(rep));
  write_file(d / "stats.csv", stats_csv(rep));
  write_file(d / "events.csv", events_csv(rep));
  for (const auto& v : rep.variants) {
    const std::string name(to_string(v.variant));
    write_records(v.records, (d / fmt::format("conversations_{}.jsonl", name)).string());
    json t = totals_json(v.totals);
    t["variant"] = name;
    t["agents"] = v.agents;
    t["disagreement"] = v.disagreement;
    write_file(d / fmt::format("totals_{}.json", name), t.dump() + "\n");
  }
}

void write_sweep(const SweepReport& rep, const std::string& dir) {
  fs::create_directories(dir);
  write_file(fs::path(dir) / "sweep.csv", sweep_csv(rep));
}

ExperimentReport load_report(const std::string& dir) {
  const fs::path d(dir);
  ExperimentReport rep;
  if (fs::exists(d / "config.ini")) rep.config = load_config((d / "config.ini").string());
  for (Variant v : kAllVariants) {
    const std::string name(to_string(v));
    const fs::path log = d / fmt::format("conversations_{}.jsonl", name);
    if (!fs::exists(log)) continue;
    VariantResult r;
    r.variant = v;
    auto loaded = load_records(log.string());
    for (const auto& s : loaded.skipped)
      r.events.push_back({0, "skipped_log_line", fmt::format("{}:{}: {}", log.filename().string(), s.line, s.reason)});
    r.records = std::move(loaded.items);
    const fs::path tp = d / fmt::format("totals_{}.json", name);
    if (fs::exists(tp)) {
      json t;
      try {
        t = json::parse(read_file(tp));
      } catch (const json::parse_error& e) {
        throw PersistenceError(PersistenceError::Kind::Parse, fmt::format("{}: {}", tp.string(), e.what()));
      }
      r.totals = totals_from(t);
      r.agents = t.value("agents", 0);
      r.disagreement = t.value("disagreement", std::vector<double>{});
    }
    summarize(r, static_cast<std::size_t>(rep.config.sliding_window));
    rep.variants.push_back(std::move(r));
  }
  if (rep.variants.empty()) throw PersistenceError(PersistenceError::Kind::Io, fmt::format("no conversation logs in {}", dir));
  // Full system is the reference when present.
  std::stable_partition(rep.variants.begin(), rep.variants.end(),
                        [](const VariantResult& v) { return v.variant == Variant::Full; });
  rep.comparisons = compare_variants(rep.variants, rep.alpha, rep.config.seed, rep.config.bootstrap_resamples);
  return rep;
}

}  // namespace orchestra

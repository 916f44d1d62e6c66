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
// orchestra: command-line harness.
//
//   orchestra generate --corpus-size 1000 --out runs/corpus
//   orchestra run --variant full --out runs/exp
//   orchestra sweep --out runs/sweep
//   orchestra verify
//   orchestra report --out runs/exp

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>

#include "orchestra/error.hpp"
#include "orchestra/orchestrator/convergence.hpp"
#include "orchestra/orchestrator/experiment.hpp"
#include "orchestra/orchestrator/report.hpp"
#include "orchestra/persistence/corpus_io.hpp"

using namespace orchestra;

namespace {

struct Common {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  int agents = 0;
  std::size_t corpus_size = 0;
  std::string variant = "all";
  std::string out = "out";
  bool parallel = false;
};

SimulationConfig resolve(const Common& c, CLI::App& sub) {
  SimulationConfig cfg = c.config.empty() ? SimulationConfig{} : load_config(c.config);
  if (sub.count("--seed")) cfg.seed = c.seed;
  if (sub.count("--agents")) cfg.agents = c.agents;
  if (sub.count("--corpus-size")) cfg.corpus_size = c.corpus_size;
  if (sub.count("--parallel")) cfg.parallel = c.parallel;
  if (c.variant != "all") {
    auto v = parse_variant(c.variant);
    if (!v) throw ConfigError(fmt::format("unknown variant '{}'", c.variant));
    cfg.variant = *v;
  }
  return cfg;
}

void add_common(CLI::App* sub, Common& c, bool with_variant) {
  sub->add_option("--seed", c.seed, "master seed");
  sub->add_option("--config", c.config, "INI configuration file")->check(CLI::ExistingFile);
  sub->add_option("--agents", c.agents, "number of agents");
  sub->add_option("--corpus-size", c.corpus_size, "conversations to generate");
  if (with_variant)
    sub->add_option("--variant", c.variant, "full|no-consensus|round-robin|static-weights|all");
  sub->add_option("--out", c.out, "output directory");
  sub->add_flag("--parallel", c.parallel, "phase-parallel agent execution");
}

int cmd_generate(const SimulationConfig& cfg, const std::string& out) {
  std::filesystem::create_directories(out);
  const auto corpus = make_corpus(cfg);
  const std::string path = (std::filesystem::path(out) / "corpus.jsonl").string();
  write_corpus(corpus, path);
  const auto st = corpus_statistics(corpus);
  const auto v = st.visit_shares();
  const auto t = st.task_shares();
  fmt::print("{} conversations, {} turns -> {}\n", st.conversations, st.turns, path);
  fmt::print("state shares  {:.3f} {:.3f} {:.3f} {:.3f} {:.3f}\n", v[0], v[1], v[2], v[3], v[4]);
  fmt::print("task shares   {:.3f} {:.3f} {:.3f}\n", t[0], t[1], t[2]);
  fmt::print("triggers      grammar={} knowledge={} reasoning={}\n", st.triggers[0], st.triggers[1], st.triggers[2]);
  return 0;
}

void print_summary(const ExperimentReport& rep) {
  fmt::print("{:<15} {:>6} {:>8} {:>8} {:>8} {:>10} {:>10} {:>9}\n", "variant", "convs", "context", "task",
             "handoff", "lat_mean", "lat_p95", "rollback");
  for (const auto& v : rep.variants)
    fmt::print("{:<15} {:>6} {:>8.4f} {:>8.4f} {:>8.4f} {:>10.1f} {:>10.1f} {:>9}\n", to_string(v.variant),
               v.records.size(), v.context_score, v.task_success, v.handoff_success, v.latency.mean, v.latency.p95,
               v.totals.rollbacks);
  fmt::print("bonferroni alpha = {}\n", rep.alpha);
  for (const auto& c : rep.comparisons)
    if (c.metric.rfind("probe_", 0) != 0)
      fmt::print("  {:<15} {} vs {}: diff={:+.4f} t={:.3f} p={:.4g}{}\n", c.metric, to_string(c.a), to_string(c.b),
                 c.stat.mean_difference, c.stat.t, c.stat.p,
                 c.valid ? (c.significant ? " *" : "") : " (degenerate)");
  fmt::print("latency is logical time (1 tick = 100 ms)\n");
}

int cmd_run(const SimulationConfig& cfg, const std::string& variant, const std::string& out) {
  std::vector<Variant> vs(std::begin(kAllVariants), std::end(kAllVariants));
  if (variant != "all") vs = {cfg.variant};
  const auto rep = run_experiment(cfg, vs);
  write_report(rep, out);
  print_summary(rep);
  fmt::print("report written to {}\n", out);
  return 0;
}

int cmd_sweep(const SimulationConfig& cfg, const std::vector<int>& counts, const std::string& out) {
  const auto rep = run_sweep(cfg, counts);
  write_sweep(rep, out);
  for (const auto& p : rep.points)
    fmt::print("agents={:<4} peak_memory={:>12} B overhead={:.4f} ticks={}\n", p.agents, p.totals.peak_memory_bytes,
               p.totals.overhead_fraction(), p.totals.ticks);
  fmt::print("memory fit: {:.0f} + {:.0f} n  (R^2 = {:.4f}); overhead monotone: {}\n", rep.memory_fit.intercept,
             rep.memory_fit.slope, rep.memory_fit.r2, rep.overhead_monotone ? "yes" : "no");
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  int failures = 0;
  auto line = [&](bool ok, const std::string& what) {
    fmt::print("{} {}\n", ok ? "PASS" : "FAIL", what);
    failures += ok ? 0 : 1;
  };
  RandomStream rng(seed, 0x7e);
  bool mono = true, reach = true, violated = false;
  for (int run = 0; run < 20; ++run) {
    RandomStream r = rng.fork(static_cast<std::uint64_t>(run));
    const auto h = ContractionHarness::random(3, r, 1.0);
    std::vector<Vector> samples;
    for (int i = 0; i < 16; ++i) samples.push_back(r.normal_vector(3) * 3.0);
    const double lip = estimate_lipschitz([&](const Vector& x) { return h.field(x); }, samples, r);
    const Vector x0 = h.target + r.normal_vector(3) * 2.0;
    const double good = 0.9 / (2.0 * lip), bad = 2.1 / (2.0 * lip);
    const auto v1 = verify_convergence(h.run(x0, good, 20000), h.target, good, lip);
    mono = mono && v1.monotone;
    reach = reach && v1.within_bound;
    violated = violated || !verify_convergence(h.run(x0, bad, 200), h.target, bad, lip).monotone;
  }
  line(mono, "contraction harness: V non-increasing for alpha = 0.9/(2L) on 20 runs");
  line(reach, fmt::format("contraction harness: V <= 1e-3 within K/(alpha eps) with K = {}", kConvergenceK));
  line(violated, "contraction harness: alpha = 2.1/(2L) breaks monotonicity");
  line(bonferroni_alpha() == 0.0125, "bonferroni alpha = 0.0125");
  return failures == 0 ? 0 : 1;
}

int cmd_report(const std::string& out) {
  const auto rep = load_report(out);
  write_report(rep, out);
  print_summary(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orchestra: multi-agent coordination simulator"};
  app.require_subcommand(1);
  Common c;
  std::vector<int> counts = {10, 50, 100};

  auto* gen = app.add_subcommand("generate", "generate a conversation corpus");
  add_common(gen, c, false);
  auto* run = app.add_subcommand("run", "run an experiment over method variants");
  add_common(run, c, true);
  auto* sweep = app.add_subcommand("sweep", "scalability sweep over agent counts");
  add_common(sweep, c, true);
  sweep->add_option("--counts", counts, "agent counts")->delimiter(',');
  auto* verify = app.add_subcommand("verify", "convergence and invariant checks");
  add_common(verify, c, false);
  auto* report = app.add_subcommand("report", "re-render tables from logs in --out");
  report->add_option("--out", c.out, "report directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(resolve(c, *gen), c.out);
    if (*run) return cmd_run(resolve(c, *run), c.variant, c.out);
    if (*sweep) return cmd_sweep(resolve(c, *sweep), counts, c.out);
    if (*verify) return cmd_verify(resolve(c, *verify).seed);
    if (*report) return cmd_report(c.out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

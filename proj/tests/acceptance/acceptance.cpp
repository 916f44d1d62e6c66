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

// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Seeds here are disjoint from the ones used to calibrate
// kConvergenceK.

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "orchestra/consensus/consensus.hpp"
#include "orchestra/convgen/generator.hpp"
#include "orchestra/metrics/rouge.hpp"
#include "orchestra/metrics/stats.hpp"
#include "orchestra/numerics/mlp.hpp"
#include "orchestra/orchestrator/convergence.hpp"
#include "orchestra/orchestrator/experiment.hpp"
#include "orchestra/orchestrator/report.hpp"
#include "orchestra/persistence/checkpoint.hpp"
#include "orchestra/routing/routing.hpp"

using namespace orchestra;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. Lyapunov descent on the contraction harness.
Verdict convergence() {
  const auto t0 = Clock::now();
  RandomStream root(0xacce97, 1);
  int good = 0, violated_large = 0;
  double worst_fraction = 0.0;
  for (int run = 0; run < 20; ++run) {
    RandomStream r = root.fork(static_cast<std::uint64_t>(run));
    const auto h = ContractionHarness::random(3, r, 1.0 + r.uniform(0.0, 3.0));
    std::vector<Vector> samples;
    for (int i = 0; i < 16; ++i) samples.push_back(r.normal_vector(3) * 3.0);
    const double lip = estimate_lipschitz([&](const Vector& x) { return h.field(x); }, samples, r);
    const Vector x0 = h.target + r.normal_vector(3) * 2.0;

    const double a = 0.9 / (2.0 * lip);
    const auto v = verify_convergence(h.run(x0, a, 20000), h.target, a, lip);
    if (v.monotone && v.within_bound) ++good;
    if (v.converged_tick) worst_fraction = std::max(worst_fraction, *v.converged_tick / v.bound_ticks);

    const double big = 2.1 / (2.0 * lip);
    if (!verify_convergence(h.run(x0, big, 200), h.target, big, lip).monotone) ++violated_large;
  }
  const double secs = seconds_since(t0);
  return {good == 20 && violated_large >= 1 && secs < 60.0,
          fmt::format("{}/20 monotone within K/(a eps) (worst {:.2f} of bound); {}/20 violate at 2.1/(2L); {:.1f}s",
                      good, worst_fraction, violated_large, secs)};
}

// 2. Consensus fixed point and the two-agent geometric sequence.
Verdict consensus() {
  RandomStream r(0xc0);
  const Vector p = r.normal_vector(64);
  const std::vector<Vector> same(5, p);
  const auto w = adaptive_weight_matrix(std::vector<double>{0.9, 0.2, 0.5, 0.7, 0.4});
  bool fixed = true;
  for (const auto& x : consensus_step(same, w, 0.3, {}, 0.0)) fixed = fixed && x == p;

  Matrix mutual(2, 2);
  mutual << 0.0, 1.0, 1.0, 0.0;
  std::vector<Vector> s{Vector::Zero(1), Vector::Ones(1)};
  double err = 0.0;
  for (int k = 1; k <= 50; ++k) {
    s = consensus_step(s, mutual, 0.25, {}, 0.0);
    const double gap = std::pow(0.5, k + 1);
    err = std::max({err, std::abs(s[0](0) - (0.5 - gap)), std::abs(s[1](0) - (0.5 + gap))});
  }
  return {fixed && err < 1e-9, fmt::format("equal prompts fixed: {}; max error vs closed form {:.2e}", fixed, err)};
}

// 3. Adaptive weights and load factor.
Verdict weights_and_load() {
  RandomStream r(0x3e);
  double sum_err = 0.0, scale_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + r.below(16);
    std::vector<double> e(n), scaled(n);
    const double gamma = std::exp(r.uniform(-8.0, 8.0));
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = r.uniform(1e-3, 1.0);
      scaled[i] = gamma * e[i];
    }
    const auto a = adaptive_weights(e), b = adaptive_weights(scaled);
    sum_err = std::max(sum_err, std::abs(std::accumulate(a.begin(), a.end(), 0.0) - 1.0));
    for (std::size_t i = 0; i < n; ++i) scale_err = std::max(scale_err, std::abs(a[i] - b[i]));
  }
  const double sat = load_factor({10, 50, 0.8}), half = load_factor({5, 25, 0.4});
  return {sum_err < 1e-9 && scale_err < 1e-9 && sat == 1.0 && std::abs(half - 0.5) < 1e-12,
          fmt::format("sum err {:.1e}, scale err {:.1e}, L(10,50,0.8)={}, L(5,25,0.4)={}", sum_err, scale_err, sat,
                      half)};
}

// 4. ROUGE-L against an exhaustive LCS table.
Verdict rouge() {
  const auto t0 = Clock::now();
  constexpr int kMax = 8;
  // Sequences are indexed shortest first; an id decodes as (parent, last).
  std::vector<std::uint32_t> parent{0};
  std::vector<std::uint8_t> last{0}, len{0};
  std::vector<Tokens> seqs{{}};
  static const char* kAlpha[] = {"a", "b", "c"};
  std::size_t begin = 0;
  for (int l = 1; l <= kMax; ++l) {
    const std::size_t end = seqs.size();
    for (std::size_t i = begin; i < end; ++i)
      for (std::uint8_t t = 0; t < 3; ++t) {
        parent.push_back(static_cast<std::uint32_t>(i));
        last.push_back(t);
        len.push_back(static_cast<std::uint8_t>(l));
        Tokens s = seqs[i];
        s.emplace_back(kAlpha[t]);
        seqs.push_back(std::move(s));
      }
    begin = end;
  }
  const std::size_t n = seqs.size();
  // Oracle table over the whole sequence space via the prefix recurrence;
  // both prefixes of every pair are themselves in the table.
  std::vector<std::uint8_t> table(n * n, 0);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 1; j < n; ++j) {
      const std::size_t pi = parent[i], pj = parent[j];
      table[i * n + j] = last[i] == last[j]
                             ? static_cast<std::uint8_t>(table[pi * n + pj] + 1)
                             : std::max(table[pi * n + j], table[i * n + pj]);
    }
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      // rouge_l runs the LCS itself; its precision carries the length.
      const std::size_t l = table[i * n + j];
      const auto s = rouge_l(seqs[i], seqs[j]);
      if (len[i] && std::lround(s.precision * len[i]) != static_cast<long>(l)) {
        ++mismatches;
        continue;
      }
      const double p = len[i] ? static_cast<double>(l) / len[i] : 0.0;
      const double rc = len[j] ? static_cast<double>(l) / len[j] : 0.0;
      const double f = p + rc > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0;
      if (std::abs(s.precision - p) > 1e-12 || std::abs(s.recall - rc) > 1e-12 || std::abs(s.f - f) > 1e-12)
        ++mismatches;
    }
  // Spot-check the raw length routine on a strided subset.
  for (std::size_t i = 0; i < n; i += 97)
    for (std::size_t j = 0; j < n; ++j) mismatches += lcs_length(seqs[i], seqs[j]) != table[i * n + j];
  RandomStream r(0x5ca1e);
  std::size_t asym = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto& a = seqs[r.below(n)];
    const auto& b = seqs[r.below(n)];
    if (rouge_l(a, b).f != rouge_l(b, a).f) ++asym;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && asym == 0 && secs < 120.0,
          fmt::format("{} sequences, {} pairs, {} mismatches; {} asymmetric of 10000; {:.1f}s", n, n * n, mismatches,
                      asym, secs)};
}

// 5. Generator statistics and trigger fixtures.
Verdict generator() {
  const auto stats = corpus_statistics(generate_corpus(10000, 0x9e0));
  const auto visits = stats.visit_shares();
  const auto tasks = stats.task_shares();
  const std::array<double, 3> task_target{0.40, 0.35, 0.25};
  double vdev = 0.0, tdev = 0.0;
  for (int k = 0; k < kFsmStates; ++k) vdev = std::max(vdev, std::abs(visits[k] - kStateMarginals[k]));
  for (int k = 0; k < 3; ++k) tdev = std::max(tdev, std::abs(tasks[k] - task_target[k]));
  ComplexityProfile depth{9, 10, 10, 2, false}, ent{3, 25, 10, 2, false}, inf{3, 10, 10, 5, false},
      edge{8, 20, 10, 4, false};
  const bool triggers = trigger_check(depth) == SpecialistKind::Grammar &&
                        trigger_check(ent) == SpecialistKind::Knowledge &&
                        trigger_check(inf) == SpecialistKind::Reasoning && !trigger_check(edge).has_value();
  return {vdev <= 0.03 && tdev <= 0.03 && triggers,
          fmt::format("visits ({:.3f} {:.3f} {:.3f} {:.3f} {:.3f}) max dev {:.3f}; tasks max dev {:.3f}; triggers {}",
                      visits[0], visits[1], visits[2], visits[3], visits[4], vdev, tdev, triggers ? "ok" : "wrong")};
}

// 6. Backprop against central differences, and clipping under blowup.
Verdict gradients() {
  RandomStream root(0x6a);
  double worst = 0.0;
  StateDims small{12, 16, 10, 5};
  const int n = small.flat_size();
  for (int k = 0; k < 100; ++k) {
    RandomStream r = root.fork(static_cast<std::uint64_t>(k));
    auto net = Mlp<double>::transition(3 * n, n + 1, 32, 16);
    net.initialize(r);
    for (auto& b : net.biases()) r.fill_normal(b);
    worst = std::max(worst, finite_diff_check(net, r.normal_vector(3 * n), 1e-5, {400, static_cast<std::uint64_t>(k)}));
  }

  SimulationConfig cfg;
  cfg.agents = 4;
  cfg.corpus_size = 16;
  const auto corpus = make_corpus(cfg);
  Orchestrator o(cfg);
  o.tick({corpus.begin(), corpus.begin() + 8});
  for (int k = 0; k < 3; ++k) o.tick();
  o.inject_failure(FailureKind::GradientBlowup, 0);
  const auto t = o.tick();
  const double applied = std::max(t.learner_applied_gradient, t.max_consensus_gradient);
  return {worst < 1e-4 && applied <= 5.0 + 1e-12 && t.learner_raw_gradient > 5.0,
          fmt::format("worst relative error {:.2e} over 100 nets; blowup raw {:.3g} -> applied {:.6f}", worst,
                      t.learner_raw_gradient, applied)};
}

// 7. Rollback and checkpoint integrity.
Verdict integrity() {
  SimulationConfig cfg;
  cfg.agents = 5;
  cfg.corpus_size = 16;
  const auto corpus = make_corpus(cfg);
  Orchestrator o(cfg);
  o.tick({corpus.begin(), corpus.begin() + 8});
  for (int k = 0; k < 3; ++k) o.tick();
  std::vector<VectorF> before;
  for (const auto& a : o.state().agents) before.push_back(a.state.prompt);
  o.inject_failure(FailureKind::ConsensusDeadlock, 0);
  const auto t = o.tick();
  bool exact = t.consensus_status == ConsensusStatus::RolledBack && t.round_restored;
  for (std::size_t i = 0; i < before.size(); ++i) exact = exact && o.state().agents[i].state.prompt == before[i];

  const auto path = (fs::temp_directory_path() / "orchestra_acceptance.ckpt").string();
  const auto ref = write_checkpoint(o.state(), path);
  const SystemState back = read_checkpoint(path, cfg.routing);
  const bool roundtrip = back == o.state() && state_digest(back) == ref.digest;

  auto bytes = encode_checkpoint(o.state());
  bytes[bytes.size() / 2] ^= 0x40;
  std::string rejected = "accepted";
  try {
    decode_checkpoint(bytes, cfg.routing);
  } catch (const PersistenceError& e) {
    if (e.kind() == PersistenceError::Kind::DigestMismatch) rejected = "DigestMismatch";
    else rejected = "wrong kind";
  }
  return {exact && roundtrip && rejected == "DigestMismatch",
          fmt::format("deadlock rollback bit-exact: {}; roundtrip {} (digest {}...); corrupted byte: {}", exact,
                      roundtrip, ref.digest.substr(0, 12), rejected)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Files that differ between two report directories; config.ini is skipped
// when `skip_config` (it records the parallel flag itself).
std::size_t tree_diff(const fs::path& a, const fs::path& b, bool skip_config) {
  std::size_t diff = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (skip_config && e.path().filename() == "config.ini") continue;
    const fs::path o = b / e.path().filename();
    if (!fs::exists(o) || slurp(e.path()) != slurp(o)) ++diff;
  }
  return diff;
}

// 8. Byte-identical reports.
Verdict determinism() {
  const auto root = fs::temp_directory_path() / "orchestra_acceptance_det";
  fs::remove_all(root);
  SimulationConfig cfg;
  for (const char* name : {"serial_a", "serial_b"}) write_report(run_experiment(cfg), (root / name).string());
  cfg.parallel = true;
  for (const char* name : {"parallel_a", "parallel_b"}) write_report(run_experiment(cfg), (root / name).string());
  const auto files = std::distance(fs::directory_iterator(root / "serial_a"), fs::directory_iterator());
  const std::size_t ss = tree_diff(root / "serial_a", root / "serial_b", false);
  const std::size_t pp = tree_diff(root / "parallel_a", root / "parallel_b", false);
  const std::size_t sp = tree_diff(root / "serial_a", root / "parallel_a", true);
  return {ss == 0 && pp == 0 && sp == 0 && files > 5,
          fmt::format("{} files per report; differing files serial/serial {}, parallel/parallel {}, serial/parallel {}",
                      files, ss, pp, sp)};
}

// 9. Context score against handoff count.
Verdict trend() {
  SimulationConfig cfg;
  cfg.corpus_size = 1000;
  const auto rep = run_experiment(cfg, {Variant::Full, Variant::NoConsensus});
  const auto& full = rep.find(Variant::Full)->probe_mean;
  const auto& none = rep.find(Variant::NoConsensus)->probe_mean;
  bool monotone = true, dominates = true;
  for (std::size_t k = 1; k < full.size(); ++k) monotone = monotone && full[k] <= full[k - 1];
  for (std::size_t k = 2; k < full.size() && k < none.size(); ++k) dominates = dominates && full[k] > none[k];
  double p7 = 1.0;
  for (const auto& c : rep.comparisons)
    if (c.metric == "probe_7" && c.b == Variant::NoConsensus && c.valid) p7 = c.stat.p;
  return {monotone && dominates && p7 < 0.0125 && full.size() > 7,
          fmt::format("full curve monotone: {}; dominates at k>=2: {}; k=7 full {:.4f} vs {:.4f}, Welch p = {:.3g}",
                      monotone, dominates, full.size() > 7 ? full[7] : 0.0, none.size() > 7 ? none[7] : 0.0, p7)};
}

// 10. Scalability sweep.
Verdict sweep() {
  const auto t0 = Clock::now();
  SimulationConfig cfg;
  const auto rep = run_sweep(cfg, {10, 50, 100});
  const double secs = seconds_since(t0);
  std::string ov;
  for (const auto& p : rep.points) ov += fmt::format(" {}:{:.4f}", p.agents, p.totals.overhead_fraction());
  return {rep.points.size() == 3 && rep.memory_fit.r2 > 0.95 && rep.overhead_monotone && secs < 900.0,
          fmt::format("memory R^2 {:.4f}; overhead{}; {:.0f}s", rep.memory_fit.r2, ov, secs)};
}

// 11. Statistics reference values.
Verdict statistics() {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 6};
  const auto w = welch_t(a, b);
  RandomStream r(0x11);
  const std::vector<double> flat(40, 0.7);
  const auto ci = bootstrap_ci(flat, [](std::span<const double> x) { return mean(x); }, r, 2000);
  const double alpha = bonferroni_alpha();
  const bool ok = std::abs(w.t + 1.0) < 1e-3 && std::abs(w.df - 8.0) < 1e-3 && std::abs(w.p - 0.3466) < 1e-3 &&
                  ci.first == ci.second && alpha == 0.0125;
  return {ok, fmt::format("t={:.4f} df={:.4f} p={:.4f}; constant-sample CI width {}; alpha={}", w.t, w.df, w.p,
                          ci.second - ci.first, alpha)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"convergence bound on the contraction harness", convergence},
      {"consensus fixed point and geometric contraction", consensus},
      {"adaptive weights and load factor", weights_and_load},
      {"ROUGE-L exhaustive oracle and symmetry", rouge},
      {"generator visit/task statistics and triggers", generator},
      {"gradient check and clipping under blowup", gradients},
      {"rollback and checkpoint integrity", integrity},
      {"byte-identical reports, serial and parallel", determinism},
      {"context score trend against handoff count", trend},
      {"scalability sweep 10/50/100", sweep},
      {"statistics reference values", statistics},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    failed += v.pass ? 0 : 1;
    fmt::print("{} [{:2}] {}: {}\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}

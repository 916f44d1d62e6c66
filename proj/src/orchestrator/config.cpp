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
#include "orchestra/orchestrator/config.hpp"

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <functional>
#include <map>
#include <sstream>

#include "orchestra/error.hpp"

namespace orchestra {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoConsensus: return "no-consensus";
    case Variant::RoundRobin: return "round-robin";
    case Variant::StaticWeights: return "static-weights";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view s) {
  for (Variant v : kAllVariants)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

namespace {

struct Binding {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <typename T>
Binding bind(T& ref) {
  return {[&ref](const std::string& s) {
            if constexpr (std::is_same_v<T, bool>) {
              if (s == "true" || s == "1" || s == "yes") ref = true;
              else if (s == "false" || s == "0" || s == "no") ref = false;
              else throw ConfigError(fmt::format("not a boolean: '{}'", s));
            } else if constexpr (std::is_same_v<T, std::string>) {
              ref = s;
            } else {
              try {
                ref = boost::lexical_cast<T>(s);
              } catch (const boost::bad_lexical_cast&) {
                throw ConfigError(fmt::format("not a number: '{}'", s));
              }
            }
          },
          [&ref]() -> std::string {
            if constexpr (std::is_same_v<T, bool>) return ref ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>) return ref;
            else if constexpr (std::is_floating_point_v<T>) return fmt::format("{}", ref);
            else return std::to_string(ref);
          }};
}

Binding bind_variant(Variant& v) {
  return {[&v](const std::string& s) {
            auto p = parse_variant(s);
            if (!p) throw ConfigError(fmt::format("unknown variant '{}'", s));
            v = *p;
          },
          [&v] { return std::string(to_string(v)); }};
}

Binding bind_mode(TransitionMode& m) {
  return {[&m](const std::string& s) {
            if (s == "environment") m = TransitionMode::Environment;
            else if (s == "model") m = TransitionMode::Model;
            else throw ConfigError(fmt::format("unknown transition mode '{}'", s));
          },
          [&m] { return std::string(m == TransitionMode::Model ? "model" : "environment"); }};
}

using Bindings = std::map<std::string, Binding>;  // "section.key"

Bindings bindings(SimulationConfig& c) {
  Bindings b;
  b["run.seed"] = bind(c.seed);
  b["run.agents"] = bind(c.agents);
  b["run.corpus_size"] = bind(c.corpus_size);
  b["run.variant"] = bind_variant(c.variant);
  b["run.parallel"] = bind(c.parallel);
  b["run.threads"] = bind(c.threads);
  b["run.transition_mode"] = bind_mode(c.transition_mode);
  b["run.max_ticks"] = bind(c.max_ticks);

  b["state.prompt_dim"] = bind(c.dims.prompt);
  b["state.context_dim"] = bind(c.dims.context);
  b["state.capability_rows"] = bind(c.dims.cap_rows);
  b["state.capability_cols"] = bind(c.dims.cap_cols);
  b["state.pca_components"] = bind(c.init.components);
  b["state.init_noise"] = bind(c.init.noise);
  b["state.archetype_seed"] = bind(c.init.archetype_seed);
  b["state.archetype_separation"] = bind(c.init.separation);
  b["state.baselines_per_kind"] = bind(c.baselines_per_kind);
  b["state.baseline_spread"] = bind(c.baseline_spread);
  b["state.context_window"] = bind(c.context_window);
  b["state.embed_seed"] = bind(c.embed_seed);

  b["consensus.alpha"] = bind(c.consensus.alpha);
  b["consensus.beta_grad"] = bind(c.consensus.beta_grad);
  b["consensus.lambda_penalty"] = bind(c.consensus.lambda_pen);
  b["consensus.beta_spatial"] = bind(c.consensus.beta_spatial);
  b["consensus.lambda_entropy"] = bind(c.consensus.lambda_i);
  b["consensus.max_iters"] = bind(c.consensus.max_iters);
  b["consensus.tolerance"] = bind(c.consensus.tol);
  b["consensus.delta_max_frac"] = bind(c.consensus.delta_max_frac);
  b["consensus.e_min"] = bind(c.consensus.e_min);
  b["consensus.grad_clip"] = bind(c.consensus.grad_clip);
  b["consensus.effectiveness_window"] = bind(c.effectiveness_window);

  b["routing.load_alpha"] = bind(c.routing.load.alpha);
  b["routing.load_beta"] = bind(c.routing.load.beta);
  b["routing.load_gamma"] = bind(c.routing.load.gamma);
  b["routing.c_max"] = bind(c.routing.load.c_max);
  b["routing.q_max"] = bind(c.routing.load.q_max);
  b["routing.r_max"] = bind(c.routing.load.r_max);
  b["routing.eta"] = bind(c.routing.eta);
  b["routing.decay"] = bind(c.routing.decay);
  b["routing.matrix_weight"] = bind(c.routing.matrix_weight);
  b["routing.history_cap"] = bind(c.routing.history_cap);

  b["response.kappa"] = bind(c.response.kappa);
  b["response.recall_tokens"] = bind(c.response.recall_tokens);
  b["response.fidelity_floor"] = bind(c.response.fidelity_floor);
  b["response.prompt_compatibility"] = bind(c.response.prompt_compatibility);
  b["response.max_depth"] = bind(c.response.max_depth);
  b["response.pattern_seed"] = bind(c.response.pattern_seed);

  b["learner.hidden1"] = bind(c.learner.hidden1);
  b["learner.hidden2"] = bind(c.learner.hidden2);
  b["learner.batch"] = bind(c.learner.batch);
  b["learner.grad_clip"] = bind(c.learner.clip);
  b["learner.learning_rate"] = bind(c.learner.adam.learning_rate);
  b["learner.beta1"] = bind(c.learner.adam.beta1);
  b["learner.beta2"] = bind(c.learner.adam.beta2);
  b["learner.epsilon"] = bind(c.learner.adam.epsilon);
  b["learner.lambda_coherence"] = bind(c.lambda_coherence);

  b["generator.task_ir"] = bind(c.generator.task_mix[0]);
  b["generator.task_ps"] = bind(c.generator.task_mix[1]);
  b["generator.task_creative"] = bind(c.generator.task_mix[2]);
  b["generator.max_depth"] = bind(c.generator.max_depth);
  b["generator.max_steps"] = bind(c.generator.max_steps);
  b["generator.direct_fsm"] = bind(c.direct_fsm);
  b["generator.grammar_path"] = bind(c.grammar_path);
  b["generator.depth_lo"] = bind(c.generator.ranges.depth_lo);
  b["generator.depth_hi"] = bind(c.generator.ranges.depth_hi);
  b["generator.entities_lo"] = bind(c.generator.ranges.entities_lo);
  b["generator.entities_hi"] = bind(c.generator.ranges.entities_hi);
  b["generator.relations_lo"] = bind(c.generator.ranges.relations_lo);
  b["generator.relations_hi"] = bind(c.generator.ranges.relations_hi);
  b["generator.inference_lo"] = bind(c.generator.ranges.inference_lo);
  b["generator.inference_hi"] = bind(c.generator.ranges.inference_hi);
  b["generator.trigger_depth"] = bind(c.generator.thresholds.depth);
  b["generator.trigger_entities"] = bind(c.generator.thresholds.entities);
  b["generator.trigger_inference"] = bind(c.generator.thresholds.inference);

  b["timing.tick_ms"] = bind(c.timing.tick_ms);
  b["timing.base_ms"] = bind(c.timing.base_ms);
  b["timing.per_token_ms"] = bind(c.timing.per_token_ms);
  b["timing.handoff_ms"] = bind(c.timing.handoff_ms);
  b["timing.consensus_unit_ms"] = bind(c.timing.consensus_unit_ms);
  b["timing.routing_unit_ms"] = bind(c.timing.routing_unit_ms);

  b["workload.arrivals_per_tick"] = bind(c.arrivals_per_tick);
  b["workload.agent_capacity"] = bind(c.agent_capacity);
  b["workload.utilization_window"] = bind(c.utilization_window);

  b["report.sliding_window"] = bind(c.sliding_window);
  b["report.probe_handoffs"] = bind(c.probe_handoffs);
  b["report.probe_replicates"] = bind(c.probe_replicates);
  b["report.bootstrap_resamples"] = bind(c.bootstrap_resamples);

  b["checkpoint.interval"] = bind(c.checkpoint_interval);
  b["checkpoint.dir"] = bind(c.checkpoint_dir);
  return b;
}

SimulationConfig apply_tree(const boost::property_tree::ptree& tree, SimulationConfig cfg) {
  auto b = bindings(cfg);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(fmt::format("config key '{}' outside a section", section));
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      auto it = b.find(name);
      if (it == b.end()) throw ConfigError(fmt::format("unknown config key '{}'", name));
      try {
        it->second.set(value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", name, e.what()));
      }
    }
  }
  return cfg;
}

}  // namespace

std::vector<std::string> SimulationConfig::validate() const {
  std::vector<std::string> errs;
  auto need = [&](bool ok, std::string msg) {
    if (!ok) errs.push_back(std::move(msg));
  };
  need(agents >= 0, "run.agents must be >= 0");
  need(corpus_size >= 1, "run.corpus_size must be >= 1");
  need(threads >= 1, "run.threads must be >= 1");
  need(dims.prompt >= 1 && dims.context >= 1 && dims.cap_rows >= 1, "state dimensions must be positive");
  need(dims.cap_cols >= 3, "state.capability_cols must cover the three task types");
  need(baselines_per_kind * 4 >= 2, "state.baselines_per_kind too small for PCA");
  need(init.components >= 1, "state.pca_components must be >= 1");
  need(context_window >= 1, "state.context_window must be >= 1");
  need(consensus.alpha > 0.0 && consensus.alpha <= 1.0, "consensus.alpha must lie in (0,1]");
  need(consensus.max_iters >= 1, "consensus.max_iters must be >= 1");
  need(consensus.tol > 0.0, "consensus.tolerance must be positive");
  need(consensus.delta_max_frac > 0.0, "consensus.delta_max_frac must be positive");
  need(consensus.grad_clip > 0.0, "consensus.grad_clip must be positive");
  need(effectiveness_window >= 1, "consensus.effectiveness_window must be >= 1");
  need(routing.eta >= 0.0 && routing.eta <= 1.0, "routing.eta must lie in [0,1]");
  need(routing.decay > 0.0 && routing.decay <= 1.0, "routing.decay must lie in (0,1]");
  need(routing.load.c_max > 0 && routing.load.q_max > 0 && routing.load.r_max > 0,
       "routing saturation constants must be positive");
  need(response.fidelity_floor >= 0.0 && response.fidelity_floor <= 1.0,
       "response.fidelity_floor must lie in [0,1]");
  need(response.recall_tokens >= 0, "response.recall_tokens must be >= 0");
  need(learner.hidden1 >= 1 && learner.hidden2 >= 1 && learner.batch >= 1, "learner sizes must be positive");
  need(learner.clip > 0.0, "learner.grad_clip must be positive");
  double mix = 0.0;
  for (double m : generator.task_mix) {
    need(m >= 0.0, "generator task shares must be nonnegative");
    mix += m;
  }
  need(std::abs(mix - 1.0) < 1e-9, "generator task shares must sum to 1");
  need(timing.tick_ms > 0.0, "timing.tick_ms must be positive");
  need(timing.base_ms >= 0 && timing.per_token_ms >= 0 && timing.handoff_ms >= 0 &&
           timing.consensus_unit_ms >= 0 && timing.routing_unit_ms >= 0,
       "timing costs must be nonnegative");
  need(arrivals_per_tick > 0.0, "workload.arrivals_per_tick must be positive");
  need(agent_capacity >= 1, "workload.agent_capacity must be >= 1");
  need(utilization_window >= 1, "workload.utilization_window must be >= 1");
  need(sliding_window >= 1, "report.sliding_window must be >= 1");
  need(probe_handoffs >= 0, "report.probe_handoffs must be >= 0");
  need(probe_replicates >= 1, "report.probe_replicates must be >= 1");
  need(bootstrap_resamples >= 1, "report.bootstrap_resamples must be >= 1");
  need(checkpoint_interval >= 1, "checkpoint.interval must be >= 1");
  need(max_ticks >= 1, "run.max_ticks must be >= 1");
  return errs;
}

SimulationConfig parse_config(std::string_view text, SimulationConfig base) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  return apply_tree(tree, std::move(base));
}

SimulationConfig load_config(const std::string& path, SimulationConfig base) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  return apply_tree(tree, std::move(base));
}

std::string dump_config(const SimulationConfig& cfg) {
  SimulationConfig copy = cfg;
  auto b = bindings(copy);
  std::string out, section;
  for (const auto& [name, binding] : b) {
    const auto dot = name.find('.');
    const std::string sec = name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += fmt::format("[{}]\n", sec);
      section = sec;
    }
    out += fmt::format("{} = {}\n", name.substr(dot + 1), binding.get());
  }
  return out;
}

}  // namespace orchestra

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
#include "orchestra/persistence/corpus_io.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <ostream>

#include "orchestra/error.hpp"

namespace orchestra {

using nlohmann::json;

namespace {

using Kind = PersistenceError::Kind;

std::string kind_name(std::optional<SpecialistKind> k) { return k ? std::string(to_string(*k)) : ""; }

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw PersistenceError(Kind::Parse, fmt::format("missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw PersistenceError(Kind::Parse, fmt::format("field '{}' has the wrong type", key));
  }
}

TaskType task_field(const json& j) {
  const auto s = required<std::string>(j, "task");
  auto t = parse_task_type(s);
  if (!t) throw PersistenceError(Kind::Parse, fmt::format("unknown task type '{}'", s));
  return *t;
}

json parse_object(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw PersistenceError(Kind::Parse, fmt::format("not JSON: {}", e.what()));
  }
  if (!j.is_object()) throw PersistenceError(Kind::Parse, "record is not a JSON object");
  return j;
}

template <typename T, typename Parse>
Loaded<T> load_lines(const std::string& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw PersistenceError(Kind::Io, fmt::format("cannot open {}", path));
  Loaded<T> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.items.push_back(parse(line));
    } catch (const Error& e) {
      out.skipped.push_back({n, e.what()});
    }
  }
  if (in.bad()) throw PersistenceError(Kind::Io, fmt::format("read error on {}", path));
  return out;
}

void write_line(std::ostream& sink, const std::string& s) {
  sink << s << '\n';
  if (!sink) throw PersistenceError(Kind::Io, "log sink is not writable");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw PersistenceError(Kind::Io, fmt::format("cannot open {} for writing", path));
  return out;
}

}  // namespace

std::string conversation_to_json(const Conversation& c) {
  json turns = json::array();
  for (const auto& t : c.turns) {
    turns.push_back({
        {"speaker", t.speaker},
        {"tokens", t.tokens},
        {"state", to_string(t.state)},
        {"profile",
         {{"parse_depth", t.profile.parse_depth},
          {"entities", t.profile.entities},
          {"relations", t.profile.relations},
          {"inference_steps", t.profile.inference_steps},
          {"clamped", t.profile.clamped}}},
        {"trigger", t.trigger ? json(kind_name(t.trigger)) : json(nullptr)},
        {"trigger_phrase", t.trigger_phrase},
    });
  }
  json j = {{"seed", c.seed}, {"task", to_string(c.task)}, {"answer_key", c.answer_key}, {"turns", turns}};
  return j.dump();
}

Conversation conversation_from_json(const std::string& line) {
  const json j = parse_object(line);
  Conversation c;
  c.seed = required<std::uint64_t>(j, "seed");
  c.task = task_field(j);
  c.answer_key = required<std::vector<std::string>>(j, "answer_key");
  const auto turns = required<json>(j, "turns");
  if (!turns.is_array()) throw PersistenceError(Kind::Parse, "field 'turns' is not an array");
  for (const auto& tj : turns) {
    if (!tj.is_object()) throw PersistenceError(Kind::Parse, "turn is not an object");
    Turn t;
    t.speaker = required<std::string>(tj, "speaker");
    t.tokens = required<std::vector<std::string>>(tj, "tokens");
    const auto st = required<std::string>(tj, "state");
    auto s = parse_fsm_state(st);
    if (!s) throw PersistenceError(Kind::Parse, fmt::format("unknown state '{}'", st));
    t.state = *s;
    const auto p = required<json>(tj, "profile");
    t.profile.parse_depth = required<int>(p, "parse_depth");
    t.profile.entities = required<int>(p, "entities");
    t.profile.relations = required<int>(p, "relations");
    t.profile.inference_steps = required<int>(p, "inference_steps");
    t.profile.clamped = required<bool>(p, "clamped");
    const auto trig = required<json>(tj, "trigger");
    if (!trig.is_null()) {
      const auto name = trig.is_string() ? trig.get<std::string>() : std::string();
      auto k = parse_kind(name);
      if (!k) throw PersistenceError(Kind::Parse, fmt::format("unknown trigger '{}'", name));
      t.trigger = *k;
    }
    t.trigger_phrase = required<std::vector<std::string>>(tj, "trigger_phrase");
    c.turns.push_back(std::move(t));
  }
  return c;
}

std::string record_to_json(const ConversationRecord& r) {
  json j = {
      {"seed", r.seed},
      {"task", to_string(r.task)},
      {"turns", r.turns},
      {"handoffs", r.handoffs},
      {"triggered_turns", r.triggered_turns},
      {"context_score", r.context_score},
      {"context_cosine", r.context_cosine},
      {"task_success", r.task_success},
      {"answer_complete", r.answer_complete},
      {"min_adjacent_cosine", r.min_adjacent_cosine},
      {"handoff_successes", r.handoff_successes},
      {"handoff_topic_failures", r.handoff_topic_failures},
      {"handoff_task_failures", r.handoff_task_failures},
      {"latency_ms", r.latency_ms},
      {"total_ms", r.total_ms},
      {"arrival_tick", r.arrival_tick},
      {"completion_tick", r.completion_tick},
      {"agents", r.agents},
      {"turn_latency_ms", r.turn_latency_ms},
      {"probe", r.probe},
      {"final_response", r.final_response},
  };
  return j.dump();
}

ConversationRecord record_from_json(const std::string& line) {
  const json j = parse_object(line);
  ConversationRecord r;
  r.seed = required<std::uint64_t>(j, "seed");
  r.task = task_field(j);
  r.turns = required<std::size_t>(j, "turns");
  r.handoffs = required<std::size_t>(j, "handoffs");
  r.triggered_turns = required<std::size_t>(j, "triggered_turns");
  r.context_score = required<double>(j, "context_score");
  r.context_cosine = required<double>(j, "context_cosine");
  r.task_success = required<bool>(j, "task_success");
  r.answer_complete = required<bool>(j, "answer_complete");
  r.min_adjacent_cosine = required<double>(j, "min_adjacent_cosine");
  r.handoff_successes = required<std::size_t>(j, "handoff_successes");
  r.handoff_topic_failures = required<std::size_t>(j, "handoff_topic_failures");
  r.handoff_task_failures = required<std::size_t>(j, "handoff_task_failures");
  r.latency_ms = required<double>(j, "latency_ms");
  r.total_ms = required<double>(j, "total_ms");
  r.arrival_tick = required<std::uint64_t>(j, "arrival_tick");
  r.completion_tick = required<std::uint64_t>(j, "completion_tick");
  r.agents = required<std::vector<std::uint32_t>>(j, "agents");
  r.turn_latency_ms = required<std::vector<double>>(j, "turn_latency_ms");
  r.probe = required<std::vector<double>>(j, "probe");
  r.final_response = required<std::vector<std::string>>(j, "final_response");
  return r;
}

void log_conversation(const Conversation& c, std::ostream& sink) { write_line(sink, conversation_to_json(c)); }
void log_record(const ConversationRecord& r, std::ostream& sink) { write_line(sink, record_to_json(r)); }

void write_corpus(const std::vector<Conversation>& corpus, const std::string& path) {
  auto out = open_out(path);
  for (const auto& c : corpus) log_conversation(c, out);
}

void write_records(const std::vector<ConversationRecord>& records, const std::string& path) {
  auto out = open_out(path);
  for (const auto& r : records) log_record(r, out);
}

Loaded<Conversation> load_corpus(const std::string& path) {
  return load_lines<Conversation>(path, conversation_from_json);
}

Loaded<ConversationRecord> load_records(const std::string& path) {
  return load_lines<ConversationRecord>(path, record_from_json);
}

}  // namespace orchestra

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

#include <iosfwd>
#include <string>
#include <vector>

#include "orchestra/convgen/generator.hpp"
#include "orchestra/orchestrator/orchestrator.hpp"

namespace orchestra {

struct SkippedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

template <typename T>
struct Loaded {
  std::vector<T> items;
  std::vector<SkippedLine> skipped;
};

/// One JSON object per line.
std::string conversation_to_json(const Conversation& c);
Conversation conversation_from_json(const std::string& line);
std::string record_to_json(const ConversationRecord& r);
ConversationRecord record_from_json(const std::string& line);

/// Appends one line. Throws PersistenceError if the sink has failed.
void log_conversation(const Conversation& c, std::ostream& sink);
void log_record(const ConversationRecord& r, std::ostream& sink);

/// Writes (truncating) a whole corpus / record log.
void write_corpus(const std::vector<Conversation>& corpus, const std::string& path);
void write_records(const std::vector<ConversationRecord>& records, const std::string& path);

/// Malformed lines are skipped and reported; an unreadable file throws.
Loaded<Conversation> load_corpus(const std::string& path);
Loaded<ConversationRecord> load_records(const std::string& path);

}  // namespace orchestra

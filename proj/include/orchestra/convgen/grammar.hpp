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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "orchestra/numerics/random.hpp"

namespace orchestra {

enum class RuleSection : std::uint8_t { Query, Response, Trigger };

using Symbols = std::vector<std::string>;

/// One line of a rules file: a left-hand side with one or more alternatives.
struct Rule {
  std::string lhs;
  std::vector<Symbols> alternatives;
  RuleSection section = RuleSection::Query;
  int line = 0;
};

/// Context-free grammar loaded from a rules file.
///
///   %start SYM SYM ...        start symbols (reachability roots)
///   %query / %response / %trigger   section of the following rules
///   LHS -> a B c | d          one rule, alternatives separated by '|'
///   # comment
///
/// Symbols matching [A-Z][A-Z0-9_]* are nonterminals.
class Grammar {
 public:
  static Grammar parse(std::string_view text);
  static Grammar load(const std::filesystem::path& path);
  /// The grammar shipped in the data directory.
  static const Grammar& builtin();

  static bool is_nonterminal_symbol(std::string_view sym);

  /// Throws GrammarError unless every nonterminal is defined, reachable from
  /// a start symbol, and has a terminal-only alternative.
  void validate() const;

  bool defines(std::string_view nonterminal) const;
  /// All alternatives for a nonterminal across every rule that defines it.
  const std::vector<Symbols>& alternatives(std::string_view nonterminal) const;
  /// Indices into alternatives() that contain only terminals.
  const std::vector<std::size_t>& terminal_alternatives(std::string_view nonterminal) const;

  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<std::string>& start_symbols() const { return starts_; }
  std::size_t rule_count(RuleSection s) const;

 private:
  std::vector<Rule> rules_;
  std::vector<std::string> starts_;
  std::map<std::string, std::vector<Symbols>, std::less<>> alts_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> terminal_alts_;
};

struct ParseNode {
  std::string symbol;
  bool terminal = false;
  int parent = -1;
  std::vector<int> children;
};

/// Derivation tree (node 0 is the root) plus its yield.
struct Derivation {
  std::vector<ParseNode> nodes;
  std::vector<std::string> tokens;

  /// Height counted in nonterminal levels; a single rule S -> a has depth 1.
  int depth() const;
};

/// Leftmost derivation with uniform choice among alternatives. At depth
/// max_depth only terminal-only alternatives are eligible.
Derivation expand_grammar(const Grammar& g, std::string_view start, RandomStream& rng,
                          int max_depth = 12);

/// Expands one fixed alternative of a nonterminal; its children use
/// uniform choice as in expand_grammar.
Derivation expand_alternative(const Grammar& g, std::string_view nonterminal,
                              std::size_t alternative, RandomStream& rng, int max_depth = 12);

}  // namespace orchestra

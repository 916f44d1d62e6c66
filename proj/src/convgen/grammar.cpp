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
#include "orchestra/convgen/grammar.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "orchestra/error.hpp"

namespace orchestra {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Symbols split_ws(std::string_view s) {
  Symbols out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string where(int line) { return "grammar line " + std::to_string(line) + ": "; }

}  // namespace

bool Grammar::is_nonterminal_symbol(std::string_view sym) {
  if (sym.empty() || !(sym[0] >= 'A' && sym[0] <= 'Z')) return false;
  for (char c : sym)
    if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_')) return false;
  return true;
}

Grammar Grammar::parse(std::string_view text) {
  Grammar g;
  RuleSection section = RuleSection::Query;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line[0] == '%') {
      const Symbols words = split_ws(line);
      if (words[0] == "%query") section = RuleSection::Query;
      else if (words[0] == "%response") section = RuleSection::Response;
      else if (words[0] == "%trigger") section = RuleSection::Trigger;
      else if (words[0] == "%start") {
        if (words.size() < 2) throw GrammarError(where(lineno) + "%start needs at least one symbol");
        for (std::size_t i = 1; i < words.size(); ++i) {
          if (!is_nonterminal_symbol(words[i]))
            throw GrammarError(where(lineno) + "start symbol '" + words[i] + "' is not a nonterminal");
          g.starts_.push_back(words[i]);
        }
      } else {
        throw GrammarError(where(lineno) + "unknown directive " + words[0]);
      }
      continue;
    }

    const auto arrow = line.find("->");
    if (arrow == std::string_view::npos) throw GrammarError(where(lineno) + "expected 'LHS -> symbols'");
    Rule r;
    r.lhs = std::string(trim(line.substr(0, arrow)));
    r.section = section;
    r.line = lineno;
    if (!is_nonterminal_symbol(r.lhs))
      throw GrammarError(where(lineno) + "left-hand side '" + r.lhs + "' is not a nonterminal");
    std::string_view rhs = line.substr(arrow + 2);
    while (true) {
      const auto bar = rhs.find('|');
      Symbols alt = split_ws(rhs.substr(0, bar));
      if (alt.empty()) throw GrammarError(where(lineno) + "empty alternative for " + r.lhs);
      r.alternatives.push_back(std::move(alt));
      if (bar == std::string_view::npos) break;
      rhs = rhs.substr(bar + 1);
    }
    auto& alts = g.alts_[r.lhs];
    auto& term = g.terminal_alts_[r.lhs];
    for (const auto& alt : r.alternatives) {
      bool only_terminals = true;
      for (const auto& s : alt) only_terminals = only_terminals && !is_nonterminal_symbol(s);
      if (only_terminals) term.push_back(alts.size());
      alts.push_back(alt);
    }
    g.rules_.push_back(std::move(r));
  }
  if (g.starts_.empty()) {
    if (g.rules_.empty()) throw GrammarError("grammar has no rules");
    g.starts_.push_back(g.rules_.front().lhs);
  }
  g.validate();
  return g;
}

Grammar Grammar::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GrammarError("cannot open grammar file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Grammar& Grammar::builtin() {
  static const Grammar g = load(std::filesystem::path(ORCHESTRA_DATA_DIR) / "grammar.rules");
  return g;
}

void Grammar::validate() const {
  for (const auto& r : rules_)
    for (const auto& alt : r.alternatives)
      for (const auto& s : alt)
        if (is_nonterminal_symbol(s) && !defines(s))
          throw GrammarError(where(r.line) + "nonterminal " + s + " is never defined");
  for (const auto& s : starts_)
    if (!defines(s)) throw GrammarError("start symbol " + s + " is never defined");

  std::set<std::string, std::less<>> seen;
  std::vector<std::string> stack(starts_.begin(), starts_.end());
  while (!stack.empty()) {
    std::string s = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(s).second) continue;
    for (const auto& alt : alternatives(s))
      for (const auto& sym : alt)
        if (is_nonterminal_symbol(sym) && !seen.count(sym)) stack.push_back(sym);
  }
  for (const auto& r : rules_)
    if (!seen.count(r.lhs))
      throw GrammarError(where(r.line) + "nonterminal " + r.lhs + " is unreachable from the start symbols");
  for (const auto& [lhs, idx] : terminal_alts_)
    if (idx.empty())
      throw GrammarError("nonterminal " + lhs + " has no terminal-only alternative for the depth cap");
}

bool Grammar::defines(std::string_view nt) const { return alts_.find(nt) != alts_.end(); }

const std::vector<Symbols>& Grammar::alternatives(std::string_view nt) const {
  auto it = alts_.find(nt);
  if (it == alts_.end()) throw GrammarError("undefined nonterminal " + std::string(nt));
  return it->second;
}

const std::vector<std::size_t>& Grammar::terminal_alternatives(std::string_view nt) const {
  auto it = terminal_alts_.find(nt);
  if (it == terminal_alts_.end()) throw GrammarError("undefined nonterminal " + std::string(nt));
  return it->second;
}

std::size_t Grammar::rule_count(RuleSection s) const {
  std::size_t n = 0;
  for (const auto& r : rules_) n += r.section == s ? 1 : 0;
  return n;
}

int Derivation::depth() const {
  if (nodes.empty()) return 0;
  int best = 0;
  // Nodes are appended after their parents, so one backward pass suffices.
  std::vector<int> h(nodes.size(), 0);
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto& n = nodes[i];
    if (n.terminal) continue;
    int m = 0;
    for (int c : n.children) m = std::max(m, h[static_cast<std::size_t>(c)]);
    h[i] = m + 1;
    best = std::max(best, h[i]);
  }
  return best;
}

namespace {

void expand_node(const Grammar& g, Derivation& d, int node, const Symbols& alt, int level,
                 RandomStream& rng, int max_depth);

void expand_symbol(const Grammar& g, Derivation& d, int node, int level, RandomStream& rng,
                   int max_depth) {
  const std::string sym = d.nodes[static_cast<std::size_t>(node)].symbol;
  const auto& alts = g.alternatives(sym);
  std::size_t pick;
  if (level >= max_depth) {
    const auto& term = g.terminal_alternatives(sym);
    pick = term[rng.below(term.size())];
  } else {
    pick = rng.below(alts.size());
  }
  expand_node(g, d, node, alts[pick], level, rng, max_depth);
}

void expand_node(const Grammar& g, Derivation& d, int node, const Symbols& alt, int level,
                 RandomStream& rng, int max_depth) {
  for (const auto& s : alt) {
    ParseNode child;
    child.symbol = s;
    child.terminal = !Grammar::is_nonterminal_symbol(s);
    child.parent = node;
    const int id = static_cast<int>(d.nodes.size());
    d.nodes.push_back(std::move(child));
    d.nodes[static_cast<std::size_t>(node)].children.push_back(id);
    if (d.nodes.back().terminal) {
      d.tokens.push_back(s);
    } else {
      expand_symbol(g, d, id, level + 1, rng, max_depth);
    }
  }
}

}  // namespace

Derivation expand_grammar(const Grammar& g, std::string_view start, RandomStream& rng,
                          int max_depth) {
  if (max_depth < 1) throw ContractError("expand_grammar: max_depth must be at least 1");
  Derivation d;
  d.nodes.push_back(ParseNode{std::string(start), false, -1, {}});
  expand_symbol(g, d, 0, 1, rng, max_depth);
  return d;
}

Derivation expand_alternative(const Grammar& g, std::string_view nt, std::size_t alternative,
                              RandomStream& rng, int max_depth) {
  if (max_depth < 1) throw ContractError("expand_alternative: max_depth must be at least 1");
  const auto& alts = g.alternatives(nt);
  if (alternative >= alts.size()) throw ContractError("expand_alternative: alternative out of range");
  Derivation d;
  d.nodes.push_back(ParseNode{std::string(nt), false, -1, {}});
  expand_node(g, d, 0, alts[alternative], 1, rng, max_depth);
  return d;
}

}  // namespace orchestra

// Shared fixtures and reference implementations for the test suites.
#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "treedit/grammar.hpp"
#include "treedit/syntax.hpp"

namespace treedit::testing {

inline const Grammar& minij() {
  static const Grammar g = load_grammar(TREEDIT_TEST_GRAMMAR);
  return g;
}

// Smallest derivation height of every symbol (terminals are 0).
inline std::vector<int> min_heights(const Grammar& g) {
  constexpr int kInf = std::numeric_limits<int>::max() / 2;
  std::vector<int> h(g.symbols().size(), kInf);
  for (SymbolId t : g.terminals()) h[static_cast<size_t>(t)] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : g.productions()) {
      int m = 0;
      for (SymbolId s : p.rhs) m = std::max(m, h[static_cast<size_t>(s)]);
      if (m + 1 < h[static_cast<size_t>(p.lhs)]) {
        h[static_cast<size_t>(p.lhs)] = m + 1;
        changed = true;
      }
    }
  }
  return h;
}

inline std::string random_token(const Grammar& g, SymbolId terminal, std::mt19937_64& rng) {
  static const char* kIdents[] = {"a", "b", "object", "value", "count", "get", "List", "x1", "item"};
  const auto& s = g.symbol(terminal);
  auto pick = [&](size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng); };
  switch (s.kind) {
    case TerminalKind::FixedLexeme: return s.lexeme;
    case TerminalKind::BoolLit: return pick(2) ? "true" : "false";
    case TerminalKind::IntLit: return std::to_string(pick(1000));
    default: return kIdents[pick(std::size(kIdents))];
  }
}

// Random derivation from `root`; once `depth` reaches `max_depth` only
// productions of minimal height are used so the tree stays finite. Leaves
// get random admissible tokens.
inline ParseTree random_tree(const Grammar& g, SymbolId root, std::mt19937_64& rng, int max_depth = 6) {
  static thread_local std::map<const Grammar*, std::vector<int>> cache;
  auto& h = cache.try_emplace(&g, min_heights(g)).first->second;
  std::function<Node(SymbolId, int)> grow = [&](SymbolId sym, int depth) {
    Node n;
    n.symbol = sym;
    if (g.is_terminal(sym)) {
      n.token = random_token(g, sym, rng);
      return n;
    }
    const auto& rules = g.rules_for(sym);
    std::vector<ProductionId> choices;
    for (ProductionId r : rules) {
      int m = 0;
      for (SymbolId s : g.production(r).rhs) m = std::max(m, h[static_cast<size_t>(s)]);
      if (depth < max_depth || m + 1 == h[static_cast<size_t>(sym)]) choices.push_back(r);
    }
    n.production = choices[std::uniform_int_distribution<size_t>(0, choices.size() - 1)(rng)];
    for (SymbolId s : g.production(n.production).rhs) n.children.push_back(grow(s, depth + 1));
    return n;
  };
  return grow(root, 0);
}

// Every complete left-most derivation from `root` using at most `max_rules`
// rules, in lexicographic order of rule ids.
inline std::vector<RuleSequence> enumerate_derivations(const Grammar& g, SymbolId root, size_t max_rules) {
  std::vector<RuleSequence> out;
  RuleSequence prefix;
  std::function<void(std::vector<SymbolId>)> go = [&](std::vector<SymbolId> frontier) {
    if (frontier.empty()) {
      out.push_back(prefix);
      return;
    }
    if (prefix.size() + frontier.size() > max_rules) return;
    const SymbolId top = frontier.back();
    frontier.pop_back();
    for (ProductionId r : g.rules_for(top)) {
      auto next = frontier;
      const auto& rhs = g.production(r).rhs;
      for (auto it = rhs.rbegin(); it != rhs.rend(); ++it)
        if (!g.is_terminal(*it)) next.push_back(*it);
      prefix.push_back(r);
      go(std::move(next));
      prefix.pop_back();
    }
  };
  go({root});
  return out;
}

}  // namespace treedit::testing

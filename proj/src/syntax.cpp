#include "treedit/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace treedit {

std::vector<std::string> lex(const Grammar& g, std::string_view source) {
  std::vector<std::string> punct;
  for (SymbolId t : g.terminals()) {
    const auto& s = g.symbol(t);
    if (s.kind == TerminalKind::FixedLexeme && !s.lexeme.empty() && !is_identifier(s.lexeme)) punct.push_back(s.lexeme);
  }
  std::sort(punct.begin(), punct.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });

  std::vector<std::string> out;
  size_t i = 0;
  while (i < source.size()) {
    auto c = static_cast<unsigned char>(source[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (std::isalpha(c) || c == '_') {
      size_t j = i + 1;
      while (j < source.size() && (std::isalnum(static_cast<unsigned char>(source[j])) || source[j] == '_')) ++j;
      out.emplace_back(source.substr(i, j - i));
      i = j;
      continue;
    }
    if (std::isdigit(c)) {
      size_t j = i + 1;
      while (j < source.size() && std::isdigit(static_cast<unsigned char>(source[j]))) ++j;
      out.emplace_back(source.substr(i, j - i));
      i = j;
      continue;
    }
    bool matched = false;
    for (const auto& p : punct) {
      if (source.substr(i, p.size()) == p) {
        out.push_back(p);
        i += p.size();
        matched = true;
        break;
      }
    }
    if (!matched) throw LexError(i, std::string("unexpected character '") + source[i] + "'");
  }
  return out;
}

namespace {

// Memoised top-down parser that enumerates every parse of a symbol at a
// position. The grammar is expected to be unambiguous, so the result lists
// stay tiny; at most two trees per (symbol, start, end) are kept, which is
// enough to detect ambiguity.
class AllParses {
 public:
  AllParses(const Grammar& g, std::span<const std::string> toks) : g_(g), toks_(toks) {}

  struct Result {
    Node node;
    size_t end;
  };

  const std::vector<Result>& parse(SymbolId sym, size_t pos) {
    auto key = std::make_pair(sym, pos);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    // Left recursion guard: a re-entrant call sees an empty result.
    memo_[key];
    stack_.emplace_back(sym, pos);
    std::vector<Result> results;
    for (ProductionId pid : g_.rules_for(sym)) {
      const auto& prod = g_.production(pid);
      struct Partial {
        std::vector<Node> children;
        size_t pos;
      };
      std::vector<Partial> partials{{{}, pos}};
      for (SymbolId r : prod.rhs) {
        std::vector<Partial> next;
        for (auto& part : partials) {
          if (g_.is_terminal(r)) {
            if (auto leaf = match_terminal(r, part.pos)) {
              Partial p{part.children, leaf->second};
              p.children.push_back(std::move(leaf->first));
              next.push_back(std::move(p));
            }
          } else {
            // Copy: the memo vector may be reallocated by nested calls.
            std::vector<Result> subs = parse(r, part.pos);
            for (auto& s : subs) {
              Partial p{part.children, s.end};
              p.children.push_back(std::move(s.node));
              next.push_back(std::move(p));
            }
          }
        }
        partials = std::move(next);
        if (partials.empty()) break;
      }
      for (auto& part : partials) {
        size_t same_end = static_cast<size_t>(std::count_if(
            results.begin(), results.end(), [&](const Result& r) { return r.end == part.pos; }));
        if (same_end >= 2) continue;
        Node n;
        n.symbol = sym;
        n.production = pid;
        n.children = std::move(part.children);
        results.push_back({std::move(n), part.pos});
      }
    }
    stack_.pop_back();
    auto& stored = memo_[key];
    stored = std::move(results);
    return stored;
  }

  size_t furthest() const { return furthest_; }
  const std::string& frontier() const { return frontier_; }

 private:
  std::optional<std::pair<Node, size_t>> match_terminal(SymbolId t, size_t pos) {
    Node leaf;
    leaf.symbol = t;
    if (g_.symbol(t).is_epsilon()) {
      leaf.token = "";
      return std::make_pair(std::move(leaf), pos);
    }
    if (pos < toks_.size() && g_.admits(t, toks_[pos])) {
      leaf.token = toks_[pos];
      return std::make_pair(std::move(leaf), pos + 1);
    }
    note_failure(pos);
    return std::nullopt;
  }

  void note_failure(size_t pos) {
    if (pos < furthest_ && have_failure_) return;
    if (pos > furthest_ || !have_failure_) {
      furthest_ = pos;
      have_failure_ = true;
      // Outermost nonterminal on the current path that started here.
      frontier_.clear();
      for (const auto& [s, p] : stack_) {
        if (p == pos) {
          frontier_ = g_.name(s);
          break;
        }
      }
      if (frontier_.empty() && !stack_.empty()) frontier_ = g_.name(stack_.back().first);
    }
  }

  const Grammar& g_;
  std::span<const std::string> toks_;
  std::map<std::pair<SymbolId, size_t>, std::vector<Result>> memo_;
  std::vector<std::pair<SymbolId, size_t>> stack_;
  size_t furthest_ = 0;
  bool have_failure_ = false;
  std::string frontier_;
};

}  // namespace

ParseTree parse(const Grammar& g, std::span<const std::string> tokens, std::optional<SymbolId> root) {
  SymbolId start = root.value_or(g.start());
  if (g.is_terminal(start)) throw ParseError(0, g.name(start), "parse root must be a nonterminal");
  AllParses parser(g, tokens);
  const auto& results = parser.parse(start, 0);
  std::vector<const Node*> complete;
  for (const auto& r : results)
    if (r.end == tokens.size()) complete.push_back(&r.node);
  if (complete.empty()) {
    size_t pos = parser.furthest();
    std::string at = pos < tokens.size() ? "'" + tokens[pos] + "'" : "end of input";
    std::string frontier = parser.frontier().empty() ? g.name(start) : parser.frontier();
    throw ParseError(pos, frontier,
                     "parse error at token " + std::to_string(pos) + " (" + at + ") while expanding " + frontier);
  }
  if (complete.size() > 1) throw ParseError(0, g.name(start), "ambiguous parse");
  return *complete.front();
}

ParseTree parse_source(const Grammar& g, std::string_view source, std::optional<SymbolId> root) {
  auto toks = lex(g, source);
  return parse(g, toks, root);
}

namespace {
void collect_rules(const Node& n, RuleSequence& out) {
  if (n.is_leaf()) return;
  out.push_back(n.production);
  for (const auto& c : n.children) collect_rules(c, out);
}

void collect_leaves(const Grammar& g, const Node& n, std::vector<const Node*>& out) {
  if (n.is_leaf()) {
    if (!g.symbol(n.symbol).is_epsilon()) out.push_back(&n);
    return;
  }
  for (const auto& c : n.children) collect_leaves(g, c, out);
}

void collect_leaves_mut(const Grammar& g, Node& n, std::vector<Node*>& out) {
  if (n.is_leaf()) {
    if (!g.symbol(n.symbol).is_epsilon()) out.push_back(&n);
    return;
  }
  for (auto& c : n.children) collect_leaves_mut(g, c, out);
}
}  // namespace

RuleSequence tree_to_rules(const ParseTree& t) {
  RuleSequence out;
  collect_rules(t, out);
  return out;
}

ParseTree rules_to_tree(const Grammar& g, std::span<const ProductionId> rules, std::optional<SymbolId> root) {
  Node tree;
  if (root) {
    tree.symbol = *root;
  } else if (!rules.empty()) {
    auto r0 = rules.front();
    if (r0 < 0 || static_cast<size_t>(r0) >= g.num_productions())
      throw DerivationError(DerivationError::Kind::UnknownRule, 1, "unknown rule id " + std::to_string(r0));
    tree.symbol = g.production(r0).lhs;
  } else {
    tree.symbol = g.start();
  }

  std::vector<Node*> frontier;
  if (!g.is_terminal(tree.symbol)) frontier.push_back(&tree);

  for (size_t k = 0; k < rules.size(); ++k) {
    ProductionId pid = rules[k];
    if (pid < 0 || static_cast<size_t>(pid) >= g.num_productions())
      throw DerivationError(DerivationError::Kind::UnknownRule, k + 1, "unknown rule id " + std::to_string(pid));
    if (frontier.empty())
      throw DerivationError(DerivationError::Kind::Surplus, k + 1,
                            "rule " + std::to_string(k + 1) + " remains after the derivation completed");
    Node* node = frontier.back();
    const auto& prod = g.production(pid);
    if (prod.lhs != node->symbol)
      throw DerivationError(DerivationError::Kind::Infeasible, k + 1,
                            "rule " + std::to_string(k + 1) + " (" + g.production_string(pid) +
                                ") does not match frontier " + g.name(node->symbol));
    frontier.pop_back();
    node->production = pid;
    node->children.resize(prod.rhs.size());
    for (size_t i = 0; i < prod.rhs.size(); ++i) {
      node->children[i].symbol = prod.rhs[i];
      if (g.symbol(prod.rhs[i]).is_epsilon()) node->children[i].token = "";
    }
    for (size_t i = prod.rhs.size(); i-- > 0;)
      if (!g.is_terminal(prod.rhs[i])) frontier.push_back(&node->children[i]);
  }
  if (!frontier.empty())
    throw DerivationError(DerivationError::Kind::Incomplete, rules.size(),
                          "rules exhausted with open frontier " + g.name(frontier.back()->symbol));
  return tree;
}

std::vector<AugToken> tree_to_tokens(const Grammar& g, const ParseTree& t) {
  std::vector<const Node*> leaves;
  collect_leaves(g, t, leaves);
  std::vector<AugToken> out;
  out.reserve(leaves.size());
  for (const Node* n : leaves) {
    if (!n->token) throw std::invalid_argument("tree_to_tokens: unfilled terminal " + g.name(n->symbol));
    out.push_back({*n->token, n->symbol});
  }
  return out;
}

std::vector<std::string> token_strings(const Grammar& g, const ParseTree& t) {
  std::vector<std::string> out;
  for (auto& a : tree_to_tokens(g, t)) out.push_back(std::move(a.token));
  return out;
}

std::vector<SymbolId> terminal_types(const Grammar& g, const ParseTree& t) {
  std::vector<const Node*> leaves;
  collect_leaves(g, t, leaves);
  std::vector<SymbolId> out;
  out.reserve(leaves.size());
  for (const Node* n : leaves) out.push_back(n->symbol);
  return out;
}

void fill_tokens(const Grammar& g, ParseTree& t, std::span<const std::string> tokens) {
  std::vector<Node*> leaves;
  collect_leaves_mut(g, t, leaves);
  if (leaves.size() != tokens.size())
    throw std::invalid_argument("fill_tokens: " + std::to_string(tokens.size()) + " tokens for " +
                                std::to_string(leaves.size()) + " slots");
  for (size_t i = 0; i < leaves.size(); ++i) leaves[i]->token = tokens[i];
}

std::string render(const Grammar& g, const ParseTree& t) {
  std::vector<const Node*> leaves;
  collect_leaves(g, t, leaves);
  std::string out;
  for (const Node* n : leaves) {
    if (!n->token) throw std::invalid_argument("render: unfilled terminal " + g.name(n->symbol));
    if (!out.empty()) out += ' ';
    out += *n->token;
  }
  return out;
}

size_t node_count(const Node& t) {
  size_t n = 1;
  for (const auto& c : t.children) n += node_count(c);
  return n;
}

size_t internal_count(const Node& t) {
  if (t.is_leaf()) return 0;
  size_t n = 1;
  for (const auto& c : t.children) n += internal_count(c);
  return n;
}

const Node& node_at(const Node& t, std::span<const int> path) {
  const Node* n = &t;
  for (int i : path) n = &n->children.at(static_cast<size_t>(i));
  return *n;
}

Node& node_at(Node& t, std::span<const int> path) {
  Node* n = &t;
  for (int i : path) n = &n->children.at(static_cast<size_t>(i));
  return *n;
}

namespace {
void collect_leaf_paths(const Grammar& g, const Node& n, TreePath& cur, std::vector<TreePath>& out) {
  if (n.is_leaf()) {
    if (!g.symbol(n.symbol).is_epsilon()) out.push_back(cur);
    return;
  }
  for (size_t i = 0; i < n.children.size(); ++i) {
    cur.push_back(static_cast<int>(i));
    collect_leaf_paths(g, n.children[i], cur, out);
    cur.pop_back();
  }
}

void dump(const Grammar& g, const Node& n, int depth, std::ostringstream& os) {
  os << std::string(static_cast<size_t>(depth) * 2, ' ') << g.name(n.symbol);
  if (n.token) os << " '" << *n.token << "'";
  os << '\n';
  for (const auto& c : n.children) dump(g, c, depth + 1, os);
}
}  // namespace

std::vector<TreePath> token_leaf_paths(const Grammar& g, const Node& t) {
  std::vector<TreePath> out;
  TreePath cur;
  collect_leaf_paths(g, t, cur, out);
  return out;
}

std::string debug_string(const Grammar& g, const Node& t) {
  std::ostringstream os;
  dump(g, t, 0, os);
  return os.str();
}

}  // namespace treedit

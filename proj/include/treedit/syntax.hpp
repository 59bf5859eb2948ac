#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "treedit/grammar.hpp"

namespace treedit {

// Parse-tree node. Internal nodes carry the production that expanded them;
// terminal leaves carry a token once filled (skeleton leaves have none).
struct Node {
  SymbolId symbol = 0;
  ProductionId production = -1;
  std::vector<Node> children;
  std::optional<std::string> token;

  bool is_leaf() const { return production < 0; }
  bool operator==(const Node&) const = default;
};

using ParseTree = Node;
using RuleSequence = std::vector<ProductionId>;
using TreePath = std::vector<int>;  // child indices from the root

struct AugToken {
  std::string token;
  SymbolId type = 0;
  bool operator==(const AugToken&) const = default;
};

class LexError : public std::runtime_error {
 public:
  LexError(size_t offset, const std::string& what)
      : std::runtime_error("lex error at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(size_t position, std::string frontier, const std::string& what)
      : std::runtime_error(what), position_(position), frontier_(std::move(frontier)) {}
  // Token index where no rule applied.
  size_t position() const { return position_; }
  // Nonterminal being expanded at that position.
  const std::string& frontier() const { return frontier_; }

 private:
  size_t position_;
  std::string frontier_;
};

class DerivationError : public std::runtime_error {
 public:
  enum class Kind { Infeasible, Incomplete, Surplus, UnknownRule };
  DerivationError(Kind kind, size_t step, const std::string& what)
      : std::runtime_error(what), kind_(kind), step_(step) {}
  Kind kind() const { return kind_; }
  // 1-based index of the offending rule (Infeasible/Surplus/UnknownRule) or
  // the sequence length (Incomplete).
  size_t step() const { return step_; }

 private:
  Kind kind_;
  size_t step_;
};

// Splits source text into tokens: identifiers, integer literals and the
// grammar's punctuation lexemes (longest match). Whitespace separates.
std::vector<std::string> lex(const Grammar& g, std::string_view source);

// Parses a token stream as `root` (grammar start symbol by default). Fails
// on no parse and on ambiguous parses.
ParseTree parse(const Grammar& g, std::span<const std::string> tokens, std::optional<SymbolId> root = std::nullopt);
ParseTree parse_source(const Grammar& g, std::string_view source, std::optional<SymbolId> root = std::nullopt);

// Pre-order production ids of the internal nodes.
RuleSequence tree_to_rules(const ParseTree& t);

// Replays a rule sequence by always expanding the left-most unexpanded
// nonterminal. Leaves are typed but carry no token, except epsilon leaves
// which are filled with "". If `root` is absent the first rule picks it.
ParseTree rules_to_tree(const Grammar& g, std::span<const ProductionId> rules,
                        std::optional<SymbolId> root = std::nullopt);

// Left-to-right terminals with their types; epsilon leaves are dropped.
std::vector<AugToken> tree_to_tokens(const Grammar& g, const ParseTree& t);
std::vector<std::string> token_strings(const Grammar& g, const ParseTree& t);
// Terminal types of the non-epsilon leaves, left to right.
std::vector<SymbolId> terminal_types(const Grammar& g, const ParseTree& t);
// Fills non-epsilon leaves left to right; sizes must agree.
void fill_tokens(const Grammar& g, ParseTree& t, std::span<const std::string> tokens);

// Space-joined tokens. Throws std::invalid_argument on an unfilled leaf.
std::string render(const Grammar& g, const ParseTree& t);

size_t node_count(const Node& t);
size_t internal_count(const Node& t);

const Node& node_at(const Node& t, std::span<const int> path);
Node& node_at(Node& t, std::span<const int> path);
// Paths to the non-epsilon leaves, left to right.
std::vector<TreePath> token_leaf_paths(const Grammar& g, const Node& t);

// Multi-line indented dump for diagnostics.
std::string debug_string(const Grammar& g, const Node& t);

}  // namespace treedit

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treedit/grammar.hpp"
#include "treedit/syntax.hpp"
#include "treedit/token_model.hpp"
#include "treedit/tree_model.hpp"

namespace treedit {

struct SuggestConfig {
  int k = 5;
  int k_tree = 2;
  int k_token = 10;
  int max_steps = 60;  // 3 x max_tree_size

  // Throws std::invalid_argument when any width or max_steps is below 1.
  void validate() const;
};

struct Suggestion {
  RuleSequence rules;
  std::vector<std::string> tokens;
  std::string code;
  double log_p_tree = 0.0;
  double log_p_token = 0.0;
  double joint = 0.0;
};

struct SuggestResult {
  std::vector<Suggestion> suggestions;  // best first
  std::vector<RuleHypothesis> skeletons;
};

// Raised when the two checkpoints were trained on different grammars than
// the one supplied.
class GrammarMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check_grammar(const Grammar& g, const TreeModel& tree, const TokenModel& token);

// Decodes from an already parsed t_p.
SuggestResult suggest_tree(const TreeModel& tree, const TokenModel& token, const Grammar& g, const ParseTree& t_p,
                           const SuggestConfig& cfg);

// Parses `source` and decodes. Without an explicit root, the root symbols
// seen in training are tried from most to least frequent, then the grammar
// start symbol. Throws LexError/ParseError when nothing parses.
SuggestResult suggest(const TreeModel& tree, const TokenModel& token, const Grammar& g, std::string_view source,
                      const SuggestConfig& cfg, std::optional<SymbolId> root = std::nullopt);

ParseTree parse_input(const TreeModel& tree, const Grammar& g, std::string_view source,
                      std::optional<SymbolId> root = std::nullopt);

}  // namespace treedit

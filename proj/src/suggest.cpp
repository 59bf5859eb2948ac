#include "treedit/suggest.hpp"

#include <algorithm>
#include <map>

namespace treedit {

void SuggestConfig::validate() const {
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  if (k_tree < 1) throw std::invalid_argument("K_tree must be >= 1");
  if (k_token < 1) throw std::invalid_argument("K_token must be >= 1");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
}

void check_grammar(const Grammar& g, const TreeModel& tree, const TokenModel& token) {
  if (tree.grammar_hash != g.hash())
    throw GrammarMismatch("tree checkpoint grammar " + hash_hex(tree.grammar_hash) + " does not match " +
                          hash_hex(g.hash()));
  if (token.grammar_hash != g.hash())
    throw GrammarMismatch("token checkpoint grammar " + hash_hex(token.grammar_hash) + " does not match " +
                          hash_hex(g.hash()));
}

SuggestResult suggest_tree(const TreeModel& tree, const TokenModel& token, const Grammar& g, const ParseTree& t_p,
                           const SuggestConfig& cfg) {
  cfg.validate();
  SuggestResult res;
  const RuleSequence src_rules = tree_to_rules(t_p);
  const std::vector<AugToken> src_tokens = tree_to_tokens(g, t_p);
  std::vector<std::string> src_strings;
  for (const auto& a : src_tokens) src_strings.push_back(a.token);
  const ScopeInfo scope = build_scope(g, t_p);

  res.skeletons = beam_rules(tree.params, g, src_rules, t_p.symbol, cfg.k_tree, cfg.max_steps);

  std::map<std::vector<std::string>, Suggestion> merged;
  for (const auto& skel : res.skeletons) {
    ParseTree skeleton = rules_to_tree(g, skel.rules, t_p.symbol);
    const std::vector<SymbolId> types = terminal_types(g, skeleton);
    for (auto& hyp : beam_tokens(token.params, g, token.vocab, src_tokens, types, scope, cfg.k_token)) {
      if (hyp.tokens == src_strings) continue;
      Suggestion s;
      s.rules = skel.rules;
      s.log_p_tree = skel.log_prob;
      s.log_p_token = hyp.log_prob;
      s.joint = skel.log_prob + hyp.log_prob;
      ParseTree filled = skeleton;
      fill_tokens(g, filled, hyp.tokens);
      s.code = render(g, filled);
      s.tokens = std::move(hyp.tokens);
      auto [it, inserted] = merged.try_emplace(s.tokens, s);
      if (!inserted && s.joint > it->second.joint) it->second = std::move(s);
    }
  }

  for (auto& [_, s] : merged) res.suggestions.push_back(std::move(s));
  std::sort(res.suggestions.begin(), res.suggestions.end(), [](const Suggestion& a, const Suggestion& b) {
    if (a.joint != b.joint) return a.joint > b.joint;
    return a.tokens < b.tokens;
  });
  if (res.suggestions.size() > static_cast<size_t>(cfg.k)) res.suggestions.resize(static_cast<size_t>(cfg.k));
  return res;
}

ParseTree parse_input(const TreeModel& tree, const Grammar& g, std::string_view source, std::optional<SymbolId> root) {
  const std::vector<std::string> tokens = lex(g, source);
  if (root) return parse(g, tokens, root);

  std::vector<std::pair<std::string, int>> roots(tree.root_counts.begin(), tree.root_counts.end());
  std::stable_sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<SymbolId> order;
  for (const auto& [name, _] : roots)
    if (auto id = g.find(name); id && !g.is_terminal(*id)) order.push_back(*id);
  if (std::find(order.begin(), order.end(), g.start()) == order.end()) order.push_back(g.start());

  std::optional<ParseError> first_error;
  for (SymbolId r : order) {
    try {
      return parse(g, tokens, r);
    } catch (const ParseError& e) {
      if (!first_error) first_error = e;
    }
  }
  throw *first_error;
}

SuggestResult suggest(const TreeModel& tree, const TokenModel& token, const Grammar& g, std::string_view source,
                      const SuggestConfig& cfg, std::optional<SymbolId> root) {
  cfg.validate();
  return suggest_tree(tree, token, g, parse_input(tree, g, source, root), cfg);
}

}  // namespace treedit

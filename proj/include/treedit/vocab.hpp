#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "treedit/grammar.hpp"

namespace treedit {

inline constexpr std::string_view kUnknownToken = "<unknown>";

// Identifiers visible at an edit site, grouped by kind.
struct ScopeInfo {
  std::set<std::string> vars;
  std::set<std::string> methods;
  std::set<std::string> types;

  // Empty set for non-identifier kinds.
  const std::set<std::string>& of(TerminalKind kind) const;
  bool contains(TerminalKind kind, const std::string& token) const { return of(kind).count(token) > 0; }
  bool operator==(const ScopeInfo&) const = default;
};

// Closed token vocabulary for the token model. Id 0 is always <unknown>.
// Each entry remembers which terminal kinds it was observed as.
class Vocabulary {
 public:
  static constexpr int kUnknown = 0;

  Vocabulary();

  // Registers `token` (if new) and marks it as observed with `kind`.
  int add(const std::string& token, TerminalKind kind);

  std::optional<int> find(std::string_view token) const;
  int id_or_unknown(std::string_view token) const { return find(token).value_or(kUnknown); }
  const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  bool has_kind(int id, TerminalKind kind) const;
  std::uint8_t kind_bits(int id) const { return kinds_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }

  // Frequency-cutoff construction. Fixed lexemes and true/false are always
  // present; INT_LIT tokens are kept whenever seen; identifiers need at
  // least `min_freq` occurrences. Ordering is deterministic.
  static Vocabulary build(const Grammar& g, const std::map<std::pair<std::string, TerminalKind>, int>& counts,
                          int min_freq);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint8_t> kinds_;
  std::unordered_map<std::string, int> index_;
};

// Allowed vocabulary ids for a terminal slot, ascending. Never empty.
//   fixed lexeme        -> {lexeme}
//   BOOL_LIT            -> {true, false}
//   INT_LIT             -> vocabulary integer literals + <unknown>
//   VAR/METHOD/TYPE     -> (vocabulary tokens of that kind within scope) + <unknown>
std::vector<int> tokens_for(const Grammar& g, const Vocabulary& vocab, SymbolId type, const ScopeInfo& scope);

}  // namespace treedit

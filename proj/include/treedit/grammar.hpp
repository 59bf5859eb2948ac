#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace treedit {

using SymbolId = int;
using ProductionId = int;

// Value-bearing kinds are recognised by the reserved terminal names VAR,
// METHOD, TYPE, INT_LIT and BOOL_LIT. Every other terminal carries a fixed
// lexeme; the empty lexeme marks the epsilon terminal.
enum class TerminalKind : std::uint8_t { Var, Method, Type, IntLit, BoolLit, FixedLexeme };

std::string_view to_string(TerminalKind kind);
bool is_identifier_kind(TerminalKind kind);

struct Symbol {
  std::string name;
  bool terminal = false;
  TerminalKind kind = TerminalKind::FixedLexeme;  // meaningful for terminals only
  std::string lexeme;                              // fixed-lexeme terminals only

  bool is_epsilon() const { return terminal && kind == TerminalKind::FixedLexeme && lexeme.empty(); }
};

struct Production {
  ProductionId id = 0;
  SymbolId lhs = 0;
  std::vector<SymbolId> rhs;
};

class GrammarError : public std::runtime_error {
 public:
  GrammarError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// A closed context-free grammar. Immutable once built.
//
// Text format, one item per line ('#' starts a comment):
//   terminal NAME              value-bearing terminal (VAR, METHOD, TYPE, INT_LIT, BOOL_LIT)
//   terminal NAME = "lexeme"   fixed-lexeme terminal ("" is the epsilon terminal)
//   start NAME                 optional; defaults to the lhs of the first production
//   LHS -> SYM SYM ...         production; ids are assigned in file order
class Grammar {
 public:
  static Grammar from_text(std::string_view text);
  static Grammar load(const std::filesystem::path& path);

  const std::vector<Symbol>& symbols() const { return symbols_; }
  const Symbol& symbol(SymbolId id) const { return symbols_.at(static_cast<size_t>(id)); }
  const std::string& name(SymbolId id) const { return symbol(id).name; }
  bool is_terminal(SymbolId id) const { return symbol(id).terminal; }

  std::optional<SymbolId> find(std::string_view name) const;
  // Throws GrammarError for unknown names.
  SymbolId id_of(std::string_view name) const;

  const std::vector<Production>& productions() const { return productions_; }
  const Production& production(ProductionId id) const { return productions_.at(static_cast<size_t>(id)); }
  size_t num_productions() const { return productions_.size(); }

  SymbolId start() const { return start_; }

  // Productions headed by `nonterminal`, in id order. This is the static
  // mask used for feasibility pruning during tree decoding.
  const std::vector<ProductionId>& rules_for(SymbolId nonterminal) const;

  const std::vector<SymbolId>& nonterminals() const { return nonterminals_; }
  const std::vector<SymbolId>& terminals() const { return terminals_; }
  // Dense index of a terminal among terminals(); used for type embeddings.
  int terminal_index(SymbolId terminal) const;

  // "LHS -> A B C"
  std::string production_string(ProductionId id) const;
  std::optional<ProductionId> find_production(std::string_view text) const;

  // Whether `token` may fill a slot of the given terminal type, judged on
  // lexical shape alone (no vocabulary or scope).
  bool admits(SymbolId terminal, std::string_view token) const;
  // Identifier-shaped strings that are claimed by a fixed lexeme or a boolean.
  bool is_reserved(std::string_view token) const;

  // FNV-1a over the canonical grammar text; stored in checkpoints.
  std::uint64_t hash() const { return hash_; }
  std::string canonical_text() const;

 private:
  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, SymbolId> by_name_;
  std::vector<Production> productions_;
  std::vector<std::vector<ProductionId>> rules_by_lhs_;
  std::vector<SymbolId> nonterminals_;
  std::vector<SymbolId> terminals_;
  std::vector<int> terminal_index_;
  SymbolId start_ = 0;
  std::uint64_t hash_ = 0;

  void validate();
};

inline Grammar load_grammar(const std::filesystem::path& path) { return Grammar::load(path); }

bool is_identifier(std::string_view token);
bool is_int_literal(std::string_view token);
std::string hash_hex(std::uint64_t h);

}  // namespace treedit

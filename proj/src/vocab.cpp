#include "treedit/vocab.hpp"

#include <algorithm>

namespace treedit {

namespace {
const std::set<std::string> kNoScope;

std::uint8_t bit(TerminalKind kind) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(kind)); }
}  // namespace

const std::set<std::string>& ScopeInfo::of(TerminalKind kind) const {
  switch (kind) {
    case TerminalKind::Var: return vars;
    case TerminalKind::Method: return methods;
    case TerminalKind::Type: return types;
    default: return kNoScope;
  }
}

Vocabulary::Vocabulary() {
  tokens_.emplace_back(kUnknownToken);
  kinds_.push_back(0);
  index_.emplace(std::string(kUnknownToken), kUnknown);
}

int Vocabulary::add(const std::string& token, TerminalKind kind) {
  auto [it, inserted] = index_.try_emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) {
    tokens_.push_back(token);
    kinds_.push_back(0);
  }
  kinds_[static_cast<size_t>(it->second)] |= bit(kind);
  return it->second;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::has_kind(int id, TerminalKind kind) const { return (kind_bits(id) & bit(kind)) != 0; }

Vocabulary Vocabulary::build(const Grammar& g, const std::map<std::pair<std::string, TerminalKind>, int>& counts,
                             int min_freq) {
  Vocabulary v;
  for (SymbolId t : g.terminals()) {
    const auto& s = g.symbol(t);
    if (s.kind == TerminalKind::FixedLexeme && !s.lexeme.empty()) v.add(s.lexeme, TerminalKind::FixedLexeme);
  }
  v.add("true", TerminalKind::BoolLit);
  v.add("false", TerminalKind::BoolLit);

  // Identifier frequency is pooled over kinds; std::map keeps the order stable.
  std::map<std::string, int> ident_total;
  for (const auto& [key, n] : counts)
    if (is_identifier_kind(key.second)) ident_total[key.first] += n;

  for (const auto& [key, n] : counts) {
    const auto& [token, kind] = key;
    if (token == kUnknownToken) continue;
    if (kind == TerminalKind::IntLit) {
      v.add(token, kind);
    } else if (is_identifier_kind(kind) && ident_total[token] >= min_freq) {
      v.add(token, kind);
    }
  }
  return v;
}

std::vector<int> tokens_for(const Grammar& g, const Vocabulary& vocab, SymbolId type, const ScopeInfo& scope) {
  const auto& sym = g.symbol(type);
  std::vector<int> out;
  switch (sym.kind) {
    case TerminalKind::FixedLexeme:
      // The epsilon terminal never becomes a token slot; map it to <unknown>
      // so the mask stays non-empty.
      if (auto id = vocab.find(sym.lexeme); id && !sym.lexeme.empty()) out.push_back(*id);
      break;
    case TerminalKind::BoolLit:
      for (const char* b : {"true", "false"})
        if (auto id = vocab.find(b)) out.push_back(*id);
      break;
    case TerminalKind::IntLit:
      for (int id = 1; id < vocab.size(); ++id)
        if (vocab.has_kind(id, TerminalKind::IntLit)) out.push_back(id);
      out.push_back(Vocabulary::kUnknown);
      break;
    case TerminalKind::Var:
    case TerminalKind::Method:
    case TerminalKind::Type:
      for (const auto& tok : scope.of(sym.kind)) {
        auto id = vocab.find(tok);
        if (id && *id != Vocabulary::kUnknown && vocab.has_kind(*id, sym.kind)) out.push_back(*id);
      }
      out.push_back(Vocabulary::kUnknown);
      break;
  }
  if (out.empty()) out.push_back(Vocabulary::kUnknown);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace treedit

#include "treedit/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace treedit {

std::string_view to_string(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::Var: return "VAR";
    case TerminalKind::Method: return "METHOD";
    case TerminalKind::Type: return "TYPE";
    case TerminalKind::IntLit: return "INT_LIT";
    case TerminalKind::BoolLit: return "BOOL_LIT";
    case TerminalKind::FixedLexeme: return "FIXED";
  }
  return "?";
}

bool is_identifier_kind(TerminalKind kind) {
  return kind == TerminalKind::Var || kind == TerminalKind::Method || kind == TerminalKind::Type;
}

bool is_identifier(std::string_view token) {
  if (token.empty()) return false;
  auto c0 = static_cast<unsigned char>(token[0]);
  if (!(std::isalpha(c0) || c0 == '_')) return false;
  return std::all_of(token.begin(), token.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

bool is_int_literal(std::string_view token) {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::optional<TerminalKind> value_kind_for(std::string_view name) {
  if (name == "VAR") return TerminalKind::Var;
  if (name == "METHOD") return TerminalKind::Method;
  if (name == "TYPE") return TerminalKind::Type;
  if (name == "INT_LIT") return TerminalKind::IntLit;
  if (name == "BOOL_LIT") return TerminalKind::BoolLit;
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

bool valid_symbol_name(std::string_view s) { return is_identifier(s); }

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct RawProduction {
  std::string lhs;
  std::vector<std::string> rhs;
  int line;
};

}  // namespace

Grammar Grammar::from_text(std::string_view text) {
  Grammar g;
  std::vector<RawProduction> raw;
  std::optional<std::pair<std::string, int>> start_decl;

  std::istringstream in{std::string(text)};
  std::string line_buf;
  int line_no = 0;
  while (std::getline(in, line_buf)) {
    ++line_no;
    std::string_view line = line_buf;
    // '#' begins a comment unless it sits inside a quoted lexeme.
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.rfind("terminal ", 0) == 0) {
      if (!raw.empty()) throw GrammarError("terminal declared after productions", line_no);
      std::string_view rest = trim(line.substr(9));
      std::string_view name = rest;
      std::optional<std::string> lexeme;
      if (auto eq = rest.find('='); eq != std::string_view::npos) {
        name = trim(rest.substr(0, eq));
        std::string_view lit = trim(rest.substr(eq + 1));
        if (lit.size() < 2 || lit.front() != '"' || lit.back() != '"')
          throw GrammarError("lexeme must be double-quoted", line_no);
        lexeme = std::string(lit.substr(1, lit.size() - 2));
      }
      if (!valid_symbol_name(name)) throw GrammarError("bad terminal name '" + std::string(name) + "'", line_no);
      if (g.by_name_.count(std::string(name)))
        throw GrammarError("duplicate terminal declaration '" + std::string(name) + "'", line_no);
      Symbol sym;
      sym.name = std::string(name);
      sym.terminal = true;
      if (lexeme) {
        sym.kind = TerminalKind::FixedLexeme;
        sym.lexeme = *lexeme;
      } else if (auto kind = value_kind_for(name)) {
        sym.kind = *kind;
      } else {
        throw GrammarError("terminal '" + std::string(name) +
                               "' has no lexeme and is not one of VAR, METHOD, TYPE, INT_LIT, BOOL_LIT",
                           line_no);
      }
      g.by_name_.emplace(sym.name, static_cast<SymbolId>(g.symbols_.size()));
      g.symbols_.push_back(std::move(sym));
      continue;
    }

    if (line.rfind("start ", 0) == 0) {
      start_decl = {std::string(trim(line.substr(6))), line_no};
      continue;
    }

    auto arrow = line.find("->");
    if (arrow == std::string_view::npos) throw GrammarError("expected 'LHS -> RHS'", line_no);
    std::string lhs(trim(line.substr(0, arrow)));
    if (!valid_symbol_name(lhs)) throw GrammarError("bad nonterminal name '" + lhs + "'", line_no);
    auto rhs = split_ws(line.substr(arrow + 2));
    if (rhs.empty()) throw GrammarError("empty right-hand side for '" + lhs + "' (use the EMPTY terminal)", line_no);
    raw.push_back({std::move(lhs), std::move(rhs), line_no});
  }

  if (raw.empty()) throw GrammarError("grammar has no productions");

  // Nonterminals are introduced by appearing on a left-hand side.
  for (const auto& rp : raw) {
    auto it = g.by_name_.find(rp.lhs);
    if (it != g.by_name_.end()) {
      if (g.symbols_[static_cast<size_t>(it->second)].terminal)
        throw GrammarError("terminal '" + rp.lhs + "' used as production head", rp.line);
      continue;
    }
    Symbol sym;
    sym.name = rp.lhs;
    g.by_name_.emplace(sym.name, static_cast<SymbolId>(g.symbols_.size()));
    g.symbols_.push_back(std::move(sym));
  }

  for (const auto& rp : raw) {
    Production p;
    p.id = static_cast<ProductionId>(g.productions_.size());
    p.lhs = g.by_name_.at(rp.lhs);
    for (const auto& s : rp.rhs) {
      auto it = g.by_name_.find(s);
      if (it == g.by_name_.end()) throw GrammarError("undeclared symbol '" + s + "'", rp.line);
      p.rhs.push_back(it->second);
    }
    g.productions_.push_back(std::move(p));
  }

  if (start_decl) {
    auto it = g.by_name_.find(start_decl->first);
    if (it == g.by_name_.end() || g.symbols_[static_cast<size_t>(it->second)].terminal)
      throw GrammarError("start symbol '" + start_decl->first + "' is not a nonterminal", start_decl->second);
    g.start_ = it->second;
  } else {
    g.start_ = g.productions_.front().lhs;
  }

  g.validate();
  return g;
}

Grammar Grammar::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GrammarError("cannot open grammar file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void Grammar::validate() {
  const size_t n = symbols_.size();
  rules_by_lhs_.assign(n, {});
  terminal_index_.assign(n, -1);
  for (SymbolId s = 0; s < static_cast<SymbolId>(n); ++s) {
    if (symbols_[static_cast<size_t>(s)].terminal) {
      terminal_index_[static_cast<size_t>(s)] = static_cast<int>(terminals_.size());
      terminals_.push_back(s);
    } else {
      nonterminals_.push_back(s);
    }
  }
  for (const auto& p : productions_) rules_by_lhs_[static_cast<size_t>(p.lhs)].push_back(p.id);

  // Reachability from the start symbol.
  std::vector<bool> reached(n, false);
  std::vector<SymbolId> work{start_};
  reached[static_cast<size_t>(start_)] = true;
  while (!work.empty()) {
    SymbolId s = work.back();
    work.pop_back();
    for (ProductionId pid : rules_by_lhs_[static_cast<size_t>(s)]) {
      for (SymbolId r : productions_[static_cast<size_t>(pid)].rhs) {
        if (!reached[static_cast<size_t>(r)]) {
          reached[static_cast<size_t>(r)] = true;
          work.push_back(r);
        }
      }
    }
  }
  for (SymbolId s : nonterminals_)
    if (!reached[static_cast<size_t>(s)]) throw GrammarError("unreachable nonterminal '" + name(s) + "'");

  // Productivity: every nonterminal must derive some finite terminal string.
  std::vector<bool> productive(n, false);
  for (SymbolId t : terminals_) productive[static_cast<size_t>(t)] = true;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : productions_) {
      if (productive[static_cast<size_t>(p.lhs)]) continue;
      if (std::all_of(p.rhs.begin(), p.rhs.end(), [&](SymbolId r) { return productive[static_cast<size_t>(r)]; })) {
        productive[static_cast<size_t>(p.lhs)] = true;
        changed = true;
      }
    }
  }
  for (SymbolId s : nonterminals_)
    if (!productive[static_cast<size_t>(s)]) throw GrammarError("nonterminal '" + name(s) + "' derives no terminal string");

  hash_ = fnv1a(canonical_text());
}

std::optional<SymbolId> Grammar::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

SymbolId Grammar::id_of(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw GrammarError("unknown symbol '" + std::string(name) + "'");
}

const std::vector<ProductionId>& Grammar::rules_for(SymbolId nonterminal) const {
  if (nonterminal < 0 || static_cast<size_t>(nonterminal) >= symbols_.size() || is_terminal(nonterminal))
    throw GrammarError("rules_for: not a nonterminal (id " + std::to_string(nonterminal) + ")");
  return rules_by_lhs_[static_cast<size_t>(nonterminal)];
}

int Grammar::terminal_index(SymbolId terminal) const {
  int idx = terminal_index_.at(static_cast<size_t>(terminal));
  if (idx < 0) throw GrammarError("terminal_index: '" + name(terminal) + "' is not a terminal");
  return idx;
}

std::string Grammar::production_string(ProductionId id) const {
  const auto& p = production(id);
  std::string s = name(p.lhs) + " ->";
  for (SymbolId r : p.rhs) s += " " + name(r);
  return s;
}

std::optional<ProductionId> Grammar::find_production(std::string_view text) const {
  auto arrow = text.find("->");
  if (arrow == std::string_view::npos) return std::nullopt;
  auto lhs = find(trim(text.substr(0, arrow)));
  if (!lhs || is_terminal(*lhs)) return std::nullopt;
  auto rhs = split_ws(text.substr(arrow + 2));
  for (ProductionId pid : rules_by_lhs_[static_cast<size_t>(*lhs)]) {
    const auto& p = production(pid);
    if (p.rhs.size() != rhs.size()) continue;
    bool same = true;
    for (size_t i = 0; i < rhs.size() && same; ++i) same = name(p.rhs[i]) == rhs[i];
    if (same) return pid;
  }
  return std::nullopt;
}

bool Grammar::is_reserved(std::string_view token) const {
  if (token == "true" || token == "false") return true;
  for (SymbolId t : terminals_) {
    const auto& s = symbol(t);
    if (s.kind == TerminalKind::FixedLexeme && s.lexeme == token) return true;
  }
  return false;
}

bool Grammar::admits(SymbolId terminal, std::string_view token) const {
  const auto& s = symbol(terminal);
  if (!s.terminal) return false;
  switch (s.kind) {
    case TerminalKind::FixedLexeme: return token == s.lexeme;
    case TerminalKind::BoolLit: return token == "true" || token == "false";
    case TerminalKind::IntLit: return is_int_literal(token);
    case TerminalKind::Var:
    case TerminalKind::Method:
    case TerminalKind::Type: return is_identifier(token) && !is_reserved(token);
  }
  return false;
}

std::string Grammar::canonical_text() const {
  std::string out;
  for (SymbolId t : terminals_) {
    const auto& s = symbol(t);
    out += "terminal " + s.name;
    if (s.kind == TerminalKind::FixedLexeme) out += " = \"" + s.lexeme + "\"";
    out += '\n';
  }
  out += "start " + name(start_) + '\n';
  for (const auto& p : productions_) out += production_string(p.id) + '\n';
  return out;
}

}  // namespace treedit

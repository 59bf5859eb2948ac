#include <doctest.h>

#include <random>

#include "../support.hpp"
#include "treedit/vocab.hpp"

using namespace treedit;
using treedit::testing::minij;

namespace {

Vocabulary sample_vocab(const Grammar& g) {
  std::map<std::pair<std::string, TerminalKind>, int> counts{
      {{"object", TerminalKind::Var}, 3}, {{"this", TerminalKind::Var}, 2},   {{"rare", TerminalKind::Var}, 1},
      {{"equals", TerminalKind::Method}, 2}, {{"List", TerminalKind::Type}, 5}, {{"7", TerminalKind::IntLit}, 1},
      {{"size", TerminalKind::Var}, 1},    {{"size", TerminalKind::Method}, 1}};
  return Vocabulary::build(g, counts, 2);
}

std::set<std::string> strings(const Vocabulary& v, const std::vector<int>& ids) {
  std::set<std::string> out;
  for (int id : ids) out.insert(v.token(id));
  return out;
}

}  // namespace

TEST_SUITE("vocab") {
  TEST_CASE("build applies the frequency cutoff") {
    const Vocabulary v = sample_vocab(minij());
    CHECK(v.token(Vocabulary::kUnknown) == kUnknownToken);
    CHECK(v.find("object"));
    CHECK(v.find(";"));
    CHECK(v.find("true"));
    CHECK(v.find("7"));  // integer literals are always kept
    CHECK_FALSE(v.find("rare"));
    // Frequency is pooled across identifier kinds.
    REQUIRE(v.find("size"));
    CHECK(v.has_kind(*v.find("size"), TerminalKind::Var));
    CHECK(v.has_kind(*v.find("size"), TerminalKind::Method));
    CHECK_FALSE(v.has_kind(*v.find("object"), TerminalKind::Method));
    CHECK(v.id_or_unknown("nope") == Vocabulary::kUnknown);
  }

  TEST_CASE("tokens_for on fixed, boolean and integer slots") {
    const Grammar& g = minij();
    const Vocabulary v = sample_vocab(g);
    CHECK(strings(v, tokens_for(g, v, g.id_of("SC"), {})) == std::set<std::string>{";"});
    CHECK(strings(v, tokens_for(g, v, g.id_of("BOOL_LIT"), {})) == std::set<std::string>{"true", "false"});
    CHECK(strings(v, tokens_for(g, v, g.id_of("INT_LIT"), {})) == std::set<std::string>{"7", "<unknown>"});
  }

  TEST_CASE("identifier masks are vocabulary intersected with scope") {
    const Grammar& g = minij();
    const Vocabulary v = sample_vocab(g);
    ScopeInfo scope;
    scope.vars = {"object", "this"};
    CHECK(strings(v, tokens_for(g, v, g.id_of("VAR"), scope)) ==
          std::set<std::string>{"object", "this", "<unknown>"});
    CHECK(strings(v, tokens_for(g, v, g.id_of("VAR"), {})) == std::set<std::string>{"<unknown>"});

    // Set-intersection oracle over random scopes.
    const std::vector<std::string> pool{"object", "this", "rare", "size", "equals", "List", "zz"};
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      ScopeInfo s;
      for (const auto& tok : pool) {
        if (rng() & 1) s.vars.insert(tok);
        if (rng() & 1) s.methods.insert(tok);
        if (rng() & 1) s.types.insert(tok);
      }
      for (auto [name, kind] : {std::pair{"VAR", TerminalKind::Var}, std::pair{"METHOD", TerminalKind::Method},
                                std::pair{"TYPE", TerminalKind::Type}}) {
        std::set<std::string> oracle{"<unknown>"};
        for (const auto& tok : s.of(kind))
          if (auto id = v.find(tok); id && v.has_kind(*id, kind)) oracle.insert(tok);
        const auto ids = tokens_for(g, v, g.id_of(name), s);
        CHECK(std::is_sorted(ids.begin(), ids.end()));
        CHECK(strings(v, ids) == oracle);
      }
    }
  }

  TEST_CASE("masks are never empty") {
    const Grammar& g = minij();
    const Vocabulary empty;
    for (SymbolId t : g.terminals()) CHECK_FALSE(tokens_for(g, empty, t, {}).empty());
  }
}

#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "../support.hpp"
#include "treedit/checkpoint.hpp"
#include "treedit/suggest.hpp"

using namespace treedit;
using treedit::testing::minij;

namespace {

bool same_params(ParamList a, ParamList b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i]->name != b[i]->name || a[i]->value != b[i]->value) return false;
  return true;
}

TokenModel sample_token_model(const Grammar& g) {
  const Vocabulary v = Vocabulary::build(
      g, {{{"object", TerminalKind::Var}, 3}, {{"size", TerminalKind::Var}, 2}, {{"size", TerminalKind::Method}, 2}},
      2);
  return make_token_model(g, v, {3, 5, 0.3}, 2);
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("tree models round trip exactly") {
    const Grammar& g = minij();
    TreeModel m = make_tree_model(g, {3, 5, 0.3}, 1);
    m.root_counts = {{"Stmt", 4}, {"Ret_Stmt", 2}};
    m.params.out_w.value(0, 0) = 0.1 + 0.2;  // not exactly representable in short decimal
    std::stringstream buf;
    save_tree_model(buf, m);
    TreeModel back = load_tree_model(buf);
    CHECK(back.grammar_hash == m.grammar_hash);
    CHECK(back.root_counts == m.root_counts);
    CHECK(back.dims.embed == 3);
    CHECK(back.dims.hidden == 5);
    CHECK(same_params(back.params.params(), m.params.params()));

    std::stringstream again;
    save_tree_model(again, back);
    std::stringstream first;
    save_tree_model(first, m);
    CHECK(again.str() == first.str());
  }

  TEST_CASE("token models round trip with their vocabulary") {
    const Grammar& g = minij();
    TokenModel m = sample_token_model(g);
    const auto dir = std::filesystem::temp_directory_path() / "treedit_ckpt_test";
    std::filesystem::create_directories(dir);
    save_token_model(dir / "token.json", m);
    TokenModel back = load_token_model(dir / "token.json");
    REQUIRE(back.vocab.size() == m.vocab.size());
    for (int id = 0; id < m.vocab.size(); ++id) {
      CHECK(back.vocab.token(id) == m.vocab.token(id));
      CHECK(back.vocab.kind_bits(id) == m.vocab.kind_bits(id));
    }
    CHECK(same_params(back.params.params(), m.params.params()));
    CHECK(checkpoint_kind(dir / "token.json") == "token");
    save_tree_model(dir / "tree.json", make_tree_model(g, {3, 5, 0.3}, 1));
    CHECK(checkpoint_kind(dir / "tree.json") == "tree");
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("loading the wrong kind or a broken file fails") {
    const Grammar& g = minij();
    std::stringstream tree_buf;
    save_tree_model(tree_buf, make_tree_model(g, {3, 5, 0.3}, 1));
    CHECK_THROWS_AS(load_token_model(tree_buf), CheckpointError);

    std::stringstream junk("{\"format\": \"other\"}");
    CHECK_THROWS_AS(load_tree_model(junk), CheckpointError);
    std::stringstream garbage("not json");
    CHECK_THROWS_AS(load_tree_model(garbage), CheckpointError);
    CHECK_THROWS_AS(load_tree_model(std::filesystem::path("/nonexistent/ckpt.json")), CheckpointError);

    std::stringstream token_buf;
    save_token_model(token_buf, sample_token_model(g));
    std::string text = token_buf.str();
    const auto at = text.find("\"rows\":");
    REQUIRE(at != std::string::npos);
    text.replace(at, 7, "\"rows\":1000,\"x\":");
    std::stringstream bad(text);
    CHECK_THROWS_AS(load_token_model(bad), CheckpointError);
  }

  TEST_CASE("a checkpoint from another grammar is rejected") {
    const Grammar& g = minij();
    const Grammar other = Grammar::from_text("terminal a = \"a\"\nS -> a\n");
    TreeModel tree = make_tree_model(g, {3, 5, 0.3}, 1);
    TokenModel token = sample_token_model(g);
    std::stringstream buf;
    save_tree_model(buf, tree);
    const TreeModel back = load_tree_model(buf);
    CHECK_NOTHROW(check_grammar(g, back, token));
    CHECK_THROWS_AS(check_grammar(other, back, token), GrammarMismatch);
  }
}

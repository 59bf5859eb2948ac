#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "../support.hpp"
#include "treedit/token_model.hpp"

using namespace treedit;
using treedit::testing::minij;

namespace {

std::vector<AugToken> tokens_of(const Grammar& g, const std::string& src, const std::string& root = "Body") {
  return tree_to_tokens(g, parse_source(g, src, g.id_of(root)));
}

// Vocabulary of the equals example pair with `object` left out.
Vocabulary small_vocab(const Grammar& g) {
  return Vocabulary::build(
      g, {{{"this", TerminalKind::Var}, 2}, {{"super", TerminalKind::Var}, 2}, {{"equals", TerminalKind::Method}, 2}},
      2);
}

TokenModelParams random_params(const Grammar& g, const Vocabulary& v, std::uint64_t seed, double scale = 0.5) {
  TokenModelParams p(v.size(), static_cast<int>(g.terminals().size()), 3, 4);
  std::mt19937_64 rng(seed);
  p.init(rng, scale);
  return p;
}

Vec weights(std::initializer_list<double> w) {
  Vec v(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double x : w) v(i++) = x;
  return v;
}

}  // namespace

TEST_SUITE("token_model") {
  TEST_CASE("scope collects identifiers of the source by kind") {
    const Grammar& g = minij();
    const ScopeInfo s = build_scope(g, parse_source(g, "return super . equals ( object ) ;"));
    CHECK(s.vars == std::set<std::string>{"this", "super", "object"});
    CHECK(s.methods == std::set<std::string>{"equals"});
    CHECK(s.types.empty());
    const ScopeInfo t = build_scope(g, parse_source(g, "List a = b . get ( 3 ) ;"));
    CHECK(t.types == std::set<std::string>{"List"});
    CHECK(t.vars == std::set<std::string>{"this", "super", "a", "b"});
    CHECK(t.methods == std::set<std::string>{"get"});
  }

  TEST_CASE("encoder yields one state per source token") {
    const Grammar& g = minij();
    const Vocabulary v = small_vocab(g);
    const TokenModelParams p = random_params(g, v, 1);
    const auto src = tokens_of(g, "return object == this ;");
    const EncodedTokens enc = encode_tokens(p, g, v, src);
    CHECK(enc.states.cols() == 5);
    CHECK(enc.token_ids[1] == Vocabulary::kUnknown);
    CHECK(enc.token_ids[3] == *v.find("this"));
    CHECK(enc.type_ids[2] == g.terminal_index(g.id_of("EQ")));

    const auto seven = tokens_of(g, "x = a . f ( ) ;");
    REQUIRE(seven.size() == 8);
    CHECK(encode_tokens(p, g, v, std::span(seven).first(7)).states.cols() == 7);

    const EncodedTokens empty = encode_tokens(p, g, v, {});
    CHECK(empty.states.cols() == 1);
    CHECK(empty.token_ids == std::vector<int>{p.bos_token()});
  }

  TEST_CASE("decoder distributions live on the slot's mask") {
    const Grammar& g = minij();
    const Vocabulary v = small_vocab(g);
    const TokenModelParams p = random_params(g, v, 2);
    const auto src = tokens_of(g, "return super . equals ( object ) ;");
    const ScopeInfo scope = build_scope(g, parse_source(g, "return super . equals ( object ) ;"));
    const EncodedTokens enc = encode_tokens(p, g, v, src);
    const TokenDecoderState st = start_token_decoding(enc);

    const TokenStep sc = decode_token_step(p, g, v, st, enc, g.id_of("SC"), scope);
    CHECK(sc.dist(*v.find(";")) == 1.0);

    const TokenStep b = decode_token_step(p, g, v, st, enc, g.id_of("BOOL_LIT"), scope);
    CHECK(b.dist(*v.find("true")) + b.dist(*v.find("false")) == doctest::Approx(1.0));
    CHECK(b.dist(*v.find("true")) > 0.0);

    const TokenStep var = decode_token_step(p, g, v, st, enc, g.id_of("VAR"), scope);
    for (int id = 0; id < v.size(); ++id) {
      const bool allowed = id == Vocabulary::kUnknown || v.token(id) == "this" || v.token(id) == "super";
      CHECK((var.dist(id) > 0.0) == allowed);
    }
    CHECK(var.attention.weights.size() == 8);
  }

  TEST_CASE("copy_resolve picks the most attended compatible source token") {
    const Grammar& g = minij();
    const auto src = tokens_of(g, "return super . equals ( object ) ;");
    const ScopeInfo scope = build_scope(g, parse_source(g, "return super . equals ( object ) ;"));
    const SymbolId var = g.id_of("VAR");
    const Vec uniform = Vec::Constant(8, 0.125);
    CHECK(copy_resolve(g, uniform, src, var, scope) == "super");  // tie goes to the earliest
    CHECK(copy_resolve(g, weights({0, .1, .1, .1, .1, .5, .1, 0}), src, var, scope) == "object");
    CHECK(copy_resolve(g, weights({0, .5, .1, .1, .1, .2, .1, 0}), src, var, scope) == "super");
    CHECK(copy_resolve(g, uniform, src, g.id_of("METHOD"), scope) == "equals");

    // With a vocabulary, a token the mask can already name is not a copy target.
    const Vocabulary v = small_vocab(g);
    CHECK(copy_resolve(g, weights({0, .5, .1, .1, .1, .2, .1, 0}), src, var, scope, &v) == "object");
    // Nothing unnamed is available, so the plain rule applies.
    CHECK(copy_resolve(g, uniform, src, g.id_of("METHOD"), scope, &v) == "equals");

    // Out of scope for the slot's kind: fall back to lexical admission.
    CHECK(copy_resolve(g, weights({0, .1, .1, .5, .1, .2, .1, 0}), src, g.id_of("TYPE"), scope) == "equals");
    CHECK_FALSE(copy_resolve(g, uniform, src, g.id_of("INT_LIT"), scope));
    CHECK_FALSE(copy_resolve(g, Vec(), {}, var, scope));
  }

  TEST_CASE("training labels and concretizability") {
    const Grammar& g = minij();
    const Vocabulary v = small_vocab(g);
    const auto src = tokens_of(g, "return super . equals ( object ) ;");
    const ScopeInfo scope = build_scope(g, parse_source(g, "return super . equals ( object ) ;"));
    const SymbolId var = g.id_of("VAR");
    CHECK(token_label(g, v, {"this", var}, src, scope) == *v.find("this"));
    CHECK(token_label(g, v, {"object", var}, src, scope) == Vocabulary::kUnknown);
    CHECK_FALSE(token_label(g, v, {"other", var}, src, scope));
    CHECK(token_label(g, v, {"5", g.id_of("INT_LIT")}, src, scope) == std::nullopt);

    const auto good = tokens_of(g, "return object == this ;");
    const auto bad = tokens_of(g, "return other == this ;");
    CHECK(concretizable(g, v, src, good, scope));
    CHECK_FALSE(concretizable(g, v, src, bad, scope));
    TokenModelParams p = random_params(g, v, 3);
    try {
      token_teacher_forced_loss(p, g, v, src, bad, scope, false);
      FAIL("expected UnconcretizableTarget");
    } catch (const UnconcretizableTarget& e) {
      CHECK(e.position() == 1);
    }
  }

  TEST_CASE("forced slots cost nothing and free slots cost their share") {
    const Grammar& g = minij();
    const Vocabulary v = small_vocab(g);
    TokenModelParams p(v.size(), static_cast<int>(g.terminals().size()), 3, 4);  // all zero
    const std::vector<AugToken> fixed{{";", g.id_of("SC")}, {"return", g.id_of("RETURN")}};
    CHECK(token_teacher_forced_loss(p, g, v, {}, fixed, {}, false) == 0.0);
    const std::vector<AugToken> with_bool{{";", g.id_of("SC")}, {"true", g.id_of("BOOL_LIT")}};
    CHECK(token_teacher_forced_loss(p, g, v, {}, with_bool, {}, false) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("analytic gradients match finite differences") {
    const Grammar& g = minij();
    const Vocabulary v = small_vocab(g);
    TokenModelParams p = random_params(g, v, 4);
    const auto src = tokens_of(g, "return super . equals ( object ) ;");
    const auto tgt = tokens_of(g, "return object == this ;");
    const ScopeInfo scope = build_scope(g, parse_source(g, "return super . equals ( object ) ;"));
    auto loss = [&] { return token_teacher_forced_loss(p, g, v, src, tgt, scope, false); };
    auto loss_and_grad = [&] {
      zero_grads(p.params());
      return token_teacher_forced_loss(p, g, v, src, tgt, scope, true);
    };
    for (const auto& r : grad_check(p.params(), loss_and_grad, loss)) {
      INFO(r.name);
      CHECK(r.max_rel_error < 1e-4);
    }
  }

  TEST_CASE("beam search agrees with exhaustive enumeration") {
    const Grammar& g = minij();
    const Vocabulary v = Vocabulary::build(g,
                                           {{{"this", TerminalKind::Var}, 2},
                                            {{"a", TerminalKind::Var}, 2},
                                            {{"b", TerminalKind::Var}, 2},
                                            {{"3", TerminalKind::IntLit}, 1}},
                                           2);
    const auto src = tokens_of(g, "return a < c ;");
    const ScopeInfo scope = build_scope(g, parse_source(g, "return a < c ;"));
    const std::vector<SymbolId> types{g.id_of("VAR"), g.id_of("LE"), g.id_of("VAR")};

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const TokenModelParams p = random_params(g, v, seed, 1.0);
      const EncodedTokens enc = encode_tokens(p, g, v, src);
      std::vector<TokenHypothesis> oracle;
      std::function<void(const TokenDecoderState&, size_t)> walk = [&](const TokenDecoderState& st, size_t slot) {
        if (slot == types.size()) {
          oracle.push_back({st.tokens, st.log_prob});
          return;
        }
        const TokenStep step = decode_token_step(p, g, v, st, enc, types[slot], scope);
        for (int id : tokens_for(g, v, types[slot], scope)) {
          TokenDecoderState next;
          next.lstm = step.next;
          next.prev = id;
          next.tokens = st.tokens;
          next.log_prob = st.log_prob + std::log(step.dist(id));
          if (id == Vocabulary::kUnknown) {
            auto c = copy_resolve(g, step.attention.weights, src, types[slot], scope, &v);
            if (!c) continue;
            next.tokens.push_back(*c);
          } else {
            next.tokens.push_back(v.token(id));
          }
          walk(next, slot + 1);
        }
      };
      walk(start_token_decoding(enc), 0);
      std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
        return a.log_prob != b.log_prob ? a.log_prob > b.log_prob : a.tokens < b.tokens;
      });

      const auto beams = beam_tokens(p, g, v, src, types, scope, 1000);
      REQUIRE(beams.size() == oracle.size());
      for (size_t i = 0; i < beams.size(); ++i) {
        CHECK(beams[i].tokens == oracle[i].tokens);
        CHECK(beams[i].log_prob == doctest::Approx(oracle[i].log_prob).epsilon(1e-12));
      }
      const auto top3 = beam_tokens(p, g, v, src, types, scope, 3);
      REQUIRE(top3.size() == 3);
      // A narrow beam may prune, but its best is never better than exact.
      CHECK(top3[0].log_prob <= oracle[0].log_prob + 1e-12);
    }
  }

  TEST_CASE("width one is greedy decoding") {
    const Grammar& g = minij();
    const Vocabulary v = small_vocab(g);
    const TokenModelParams p = random_params(g, v, 6);
    const auto src = tokens_of(g, "return super . equals ( object ) ;");
    const ScopeInfo scope = build_scope(g, parse_source(g, "return super . equals ( object ) ;"));
    const std::vector<SymbolId> types{g.id_of("RETURN"), g.id_of("VAR"), g.id_of("EQ"), g.id_of("VAR"),
                                      g.id_of("SC")};
    const EncodedTokens enc = encode_tokens(p, g, v, src);
    TokenDecoderState st = start_token_decoding(enc);
    for (SymbolId t : types) {
      const TokenStep step = decode_token_step(p, g, v, st, enc, t, scope);
      Eigen::Index best;
      step.dist.maxCoeff(&best);
      const int id = static_cast<int>(best);
      st.tokens.push_back(id == Vocabulary::kUnknown ? *copy_resolve(g, step.attention.weights, src, t, scope, &v)
                                                      : v.token(id));
      st.log_prob += std::log(step.dist(id));
      st.prev = id;
      st.lstm = step.next;
    }
    const auto beams = beam_tokens(p, g, v, src, types, scope, 1);
    REQUIRE(beams.size() == 1);
    CHECK(beams[0].tokens == st.tokens);
    CHECK(beams[0].log_prob == doctest::Approx(st.log_prob));
    CHECK_THROWS_AS(beam_tokens(p, g, v, src, types, scope, 0), std::invalid_argument);
  }

  TEST_CASE("all-forced slots give a single certain hypothesis") {
    const Grammar& g = minij();
    const Vocabulary v = small_vocab(g);
    const TokenModelParams p = random_params(g, v, 7);
    const std::vector<SymbolId> types{g.id_of("RETURN"), g.id_of("SC")};
    const auto beams = beam_tokens(p, g, v, {}, types, {}, 4);
    REQUIRE(beams.size() == 1);
    CHECK(beams[0].tokens == std::vector<std::string>{"return", ";"});
    CHECK(beams[0].log_prob == 0.0);
  }
}

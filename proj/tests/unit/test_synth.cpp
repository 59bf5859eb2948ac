#include <doctest.h>

#include <set>

#include "../support.hpp"
#include "treedit/synth.hpp"
#include "treedit/token_model.hpp"

using namespace treedit;
using treedit::testing::minij;

TEST_SUITE("synth") {
  TEST_CASE("every record yields one distinct pair") {
    const Grammar& g = minij();
    SynthConfig cfg;
    cfg.records = 120;
    cfg.projects = 3;
    const auto corpus = synth_corpus(g, cfg);
    REQUIRE(corpus.size() == 120);
    const auto res = extract_pairs(corpus, g, {});
    CHECK(res.pairs.size() == 120);
    std::set<std::string> keys, projects;
    for (const auto& p : res.pairs) keys.insert(canonical_key(g, p));
    for (const auto& r : corpus) projects.insert(r.project);
    CHECK(keys.size() == 120);
    CHECK(projects.size() == 3);
    CHECK(split_and_dedup(g, res.pairs).duplicates_removed == 0);
  }

  TEST_CASE("generation is seeded") {
    const Grammar& g = minij();
    SynthConfig cfg;
    cfg.records = 20;
    const auto a = synth_corpus(g, cfg);
    const auto b = synth_corpus(g, cfg);
    cfg.seed = 8;
    const auto c = synth_corpus(g, cfg);
    auto text = [](const std::vector<PatchRecord>& v) {
      std::string s;
      for (const auto& r : v) s += r.before + "|" + r.after + "\n";
      return s;
    };
    CHECK(text(a) == text(b));
    CHECK(text(a) != text(c));
    CHECK(a[3].timestamp == cfg.first_timestamp + 3);
  }

  TEST_CASE("one-rare records carry a single fresh name that reappears in the target") {
    const Grammar& g = minij();
    SynthConfig cfg;
    cfg.records = 40;
    cfg.one_rare = true;
    const auto corpus = synth_corpus(g, cfg);
    const auto pairs = extract_pairs(corpus, g, {}).pairs;
    REQUIRE(pairs.size() == 40);
    const std::set<std::string> pools{"value", "count", "index",  "result", "other", "item",   "total",
                                      "size",  "key",   "node",   "add",    "remove", "put",    "update",
                                      "merge", "Integer", "Long", "String", "this",  "super",  "equals"};
    for (const auto& p : pairs) {
      std::set<std::string> fresh;
      for (const auto& a : tree_to_tokens(g, p.t_p))
        if (is_identifier_kind(g.symbol(a.type).kind) && !pools.count(a.token)) fresh.insert(a.token);
      CHECK(fresh.size() == 1);
      const auto target = token_strings(g, p.t_n);
      for (const auto& f : fresh) CHECK(std::find(target.begin(), target.end(), f) != target.end());
    }
  }

  TEST_CASE("template names are listed") {
    CHECK(synth_template_names().size() == 7);
  }
}

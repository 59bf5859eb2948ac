#include "treedit/synth.hpp"

#include <array>
#include <random>
#include <set>
#include <stdexcept>

namespace treedit {

namespace {

const std::array<const char*, 10> kVars = {"value", "count", "index", "result", "other",
                                           "item",  "total", "size",  "key",    "node"};
const std::array<const char*, 5> kMethods = {"add", "remove", "put", "update", "merge"};
const std::array<const char*, 3> kTypes = {"Integer", "Long", "String"};

struct Names {
  std::string a, b, m, t, p;  // two variables, a method, a type, a prefix variable
};

struct Template {
  const char* name;
  // Which of a/b are copied into the target; in one_rare mode the fresh name
  // goes to one of these.
  bool a_in_target;
  bool b_in_target;
  std::string (*before)(const Names&);
  std::string (*after)(const Names&);
};

const std::array<Template, 7> kTemplates = {{
    {"equals-to-eq", true, true, [](const Names& n) { return "return " + n.a + " . equals ( " + n.b + " ) ;"; },
     [](const Names& n) { return "return " + n.a + " == " + n.b + " ;"; }},
    {"super-equals", false, true, [](const Names& n) { return "return super . equals ( " + n.b + " ) ;"; },
     [](const Names& n) { return "return " + n.b + " == this ;"; }},
    {"lt-to-le", true, true,
     [](const Names& n) { return "if ( " + n.a + " < " + n.b + " ) { " + n.a + " = " + n.b + " ; }"; },
     [](const Names& n) { return "if ( " + n.a + " <= " + n.b + " ) { " + n.a + " = " + n.b + " ; }"; }},
    {"swap-receiver", true, true, [](const Names& n) { return n.a + " . " + n.m + " ( " + n.b + " ) ;"; },
     [](const Names& n) { return n.b + " . " + n.m + " ( " + n.a + " ) ;"; }},
    {"add-increment", true, true, [](const Names& n) { return n.t + " " + n.a + " = " + n.b + " ;"; },
     [](const Names& n) { return n.t + " " + n.a + " = " + n.b + " + 1 ;"; }},
    {"plus-to-minus", true, true, [](const Names& n) { return "return " + n.a + " + " + n.b + " ;"; },
     [](const Names& n) { return "return " + n.a + " - " + n.b + " ;"; }},
    {"eq-to-ne", true, true, [](const Names& n) { return "return " + n.a + " == " + n.b + " ;"; },
     [](const Names& n) { return "return " + n.a + " != " + n.b + " ;"; }},
}};

class NameSource {
 public:
  NameSource(const Grammar& g, std::mt19937_64& rng) : g_(g), rng_(rng) {}

  std::string common_var() { return kVars[pick(kVars.size())]; }

  std::string fresh() {
    static constexpr char kAlpha[] = "abcdefghijklmnopqrstuvwxyz";
    for (;;) {
      std::string s(1, kAlpha[pick(26)]);
      for (int i = 0; i < 5; ++i) s += kAlpha[pick(26)];
      if (g_.is_reserved(s) || used_.count(s)) continue;
      used_.insert(s);
      return s;
    }
  }

  size_t pick(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

 private:
  const Grammar& g_;
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

Names draw_names(const Template& t, const SynthConfig& cfg, NameSource& src) {
  Names n;
  n.m = kMethods[src.pick(kMethods.size())];
  n.t = kTypes[src.pick(kTypes.size())];
  n.p = src.common_var();
  if (cfg.one_rare) {
    n.a = src.common_var();
    do n.b = src.common_var();
    while (n.b == n.a);
    const bool rare_a = t.a_in_target && (!t.b_in_target || src.chance(0.5));
    (rare_a ? n.a : n.b) = src.fresh();
  } else {
    n.a = src.chance(cfg.rare_rate) ? src.fresh() : src.common_var();
    do n.b = src.chance(cfg.rare_rate) ? src.fresh() : src.common_var();
    while (n.b == n.a);
  }
  return n;
}

std::string prefix_statement(const Names& n, NameSource& src) {
  switch (src.pick(3)) {
    case 0: return n.t + " " + n.p + " = 0 ;";
    case 1: return n.p + " . " + n.m + " ( ) ;";
    default: return n.p + " = " + n.p + " + 1 ;";
  }
}

}  // namespace

const std::vector<std::string>& synth_template_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& t : kTemplates) out.emplace_back(t.name);
    return out;
  }();
  return names;
}

std::vector<PatchRecord> synth_corpus(const Grammar& g, const SynthConfig& cfg) {
  if (cfg.projects < 1) throw std::invalid_argument("synth: projects must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  NameSource names(g, rng);
  const ExtractionConfig ecfg;
  std::set<std::string> keys;
  std::vector<PatchRecord> out;
  out.reserve(cfg.records);

  size_t attempts = 0;
  while (out.size() < cfg.records) {
    if (++attempts > 100 * cfg.records + 1000) throw std::runtime_error("synth: could not generate enough distinct records");
    const Template& t = kTemplates[out.size() % kTemplates.size()];
    const Names n = draw_names(t, cfg, names);
    std::string prefix;
    if (!cfg.one_rare && names.chance(cfg.prefix_rate)) prefix = prefix_statement(n, names) + " ";

    PatchRecord r;
    r.project = cfg.projects == 1 ? "synth" : "synth" + std::to_string(out.size() % cfg.projects);
    r.timestamp = cfg.first_timestamp + static_cast<std::int64_t>(out.size());
    r.before = prefix + t.before(n);
    r.after = prefix + t.after(n);

    const auto res = extract_pairs(std::span<const PatchRecord>(&r, 1), g, ecfg);
    if (res.pairs.size() != 1) continue;
    if (!keys.insert(canonical_key(g, res.pairs.front())).second) continue;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace treedit

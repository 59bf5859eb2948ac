#include "treedit/train_eval.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace treedit {

void TrainConfig::validate() const {
  if (n_epoch < 1) throw std::invalid_argument("n_epoch must be >= 1");
  if (valid_patience < 1) throw std::invalid_argument("valid_patience must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("lr_decay must be in (0, 1]");
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,val_metric,lr\n";
  char buf[128];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.4f,%.6g\n", e.epoch, e.train_loss, e.val_metric, e.lr);
    out << buf;
  }
}

namespace {

double percent(size_t hits, size_t total) { return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / total; }

std::vector<size_t> epoch_order(size_t n, std::mt19937_64& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// Shared early-stopping loop. `run_epoch` trains one pass at the given rate
// and returns the mean loss; `validate` returns the metric in percent;
// `snapshot` stores the current parameters as the best so far.
template <typename RunEpoch, typename Validate, typename Snapshot>
void fit(const TrainConfig& cfg, TrainLog& log, std::ostream* progress, RunEpoch run_epoch, Validate validate,
         Snapshot snapshot) {
  double lr = cfg.lr;
  double best = -1.0;
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.n_epoch; ++epoch) {
    const double loss = run_epoch(lr);
    const double metric = validate();
    log.epochs.push_back({epoch, loss, metric, lr});
    if (progress)
      *progress << "epoch " << epoch << " loss " << loss << " valid " << metric << " lr " << lr << std::endl;
    if (metric > best) {
      best = metric;
      stale = 0;
      log.best_epoch = epoch;
      log.best_metric = metric;
      snapshot();
    } else {
      lr *= cfg.lr_decay;
      if (++stale >= cfg.valid_patience) break;
    }
  }
}

}  // namespace

TreeModel train_tree(const Grammar& g, const DatasetSplit& split, const TrainConfig& cfg, TrainLog* log,
                     const TreeModel* resume, std::ostream* progress) {
  cfg.validate();
  if (split.train.empty()) throw EmptyTrainingSet("training split is empty");
  TreeModel model = resume ? *resume : make_tree_model(g, cfg.dims, cfg.seed);
  if (model.grammar_hash != g.hash()) throw GrammarMismatch("tree checkpoint was trained on a different grammar");

  model.root_counts.clear();
  struct Example {
    RuleSequence src, tgt;
    SymbolId root;
  };
  std::vector<Example> train, valid;
  for (const auto& p : split.train) {
    train.push_back({tree_to_rules(p.t_p), tree_to_rules(p.t_n), p.root()});
    ++model.root_counts[g.name(p.root())];
  }
  for (const auto& p : split.valid.empty() ? split.train : split.valid)
    valid.push_back({tree_to_rules(p.t_p), tree_to_rules(p.t_n), p.root()});

  TrainLog local;
  TrainLog& out = log ? *log : local;
  out = TrainLog{};
  std::mt19937_64 rng(cfg.seed);
  TreeModelParams best = model.params;
  ParamList params = model.params.params();

  fit(
      cfg, out, progress,
      [&](double lr) {
        double total = 0.0;
        for (size_t i : epoch_order(train.size(), rng)) {
          zero_grads(params);
          total += tree_teacher_forced_loss(model.params, g, train[i].src, train[i].tgt, train[i].root, true);
          sgd_update(params, lr, cfg.clip);
        }
        return total / static_cast<double>(train.size());
      },
      [&] {
        size_t hits = 0;
        for (const auto& ex : valid) {
          auto beam = beam_rules(model.params, g, ex.src, ex.root, 1, cfg.max_steps);
          if (!beam.empty() && beam.front().rules == ex.tgt) ++hits;
        }
        return percent(hits, valid.size());
      },
      [&] { best = model.params; });

  model.params = std::move(best);
  return model;
}

Vocabulary build_vocabulary(const Grammar& g, std::span<const EditPair> pairs, int min_freq) {
  // Frequency is the number of pairs a token occurs in, so an identifier
  // local to a single edit stays out of the vocabulary however often it
  // repeats inside that edit.
  std::map<std::pair<std::string, TerminalKind>, int> counts;
  for (const auto& p : pairs) {
    std::map<std::pair<std::string, TerminalKind>, int> local;
    count_tokens(g, p.t_p, local);
    count_tokens(g, p.t_n, local);
    for (const auto& [key, _] : local) ++counts[key];
  }
  return Vocabulary::build(g, counts, min_freq);
}

TokenModel train_token(const Grammar& g, const DatasetSplit& split, const TrainConfig& cfg, TrainLog* log,
                       const TokenModel* resume, const TreeModel* tree, std::ostream* progress) {
  cfg.validate();
  if (split.train.empty()) throw EmptyTrainingSet("training split is empty");
  TokenModel model =
      resume ? *resume : make_token_model(g, build_vocabulary(g, split.train, cfg.min_freq), cfg.dims, cfg.seed);
  if (model.grammar_hash != g.hash()) throw GrammarMismatch("token checkpoint was trained on a different grammar");
  if (tree && tree->grammar_hash != g.hash()) throw GrammarMismatch("tree checkpoint was trained on a different grammar");

  TrainLog local;
  TrainLog& out = log ? *log : local;
  out = TrainLog{};

  struct Example {
    std::vector<AugToken> src, tgt;
    ScopeInfo scope;
  };
  std::vector<Example> train;
  for (const auto& p : split.train) {
    Example ex{tree_to_tokens(g, p.t_p), tree_to_tokens(g, p.t_n), build_scope(g, p.t_p)};
    if (!concretizable(g, model.vocab, ex.src, ex.tgt, ex.scope)) {
      ++out.skipped;
      continue;
    }
    train.push_back(std::move(ex));
  }
  if (train.empty()) throw EmptyTrainingSet("no concretizable training pairs");
  const auto& valid = split.valid.empty() ? split.train : split.valid;

  std::mt19937_64 rng(cfg.seed);
  TokenModelParams best = model.params;
  ParamList params = model.params.params();
  SuggestConfig greedy;
  greedy.k = greedy.k_tree = greedy.k_token = 1;
  greedy.max_steps = cfg.max_steps;

  fit(
      cfg, out, progress,
      [&](double lr) {
        double total = 0.0;
        for (size_t i : epoch_order(train.size(), rng)) {
          const auto& ex = train[i];
          zero_grads(params);
          total += token_teacher_forced_loss(model.params, g, model.vocab, ex.src, ex.tgt, ex.scope, true);
          sgd_update(params, lr, cfg.clip);
        }
        return total / static_cast<double>(train.size());
      },
      [&] {
        size_t hits = 0;
        for (const auto& p : valid) {
          const auto target = token_strings(g, p.t_n);
          if (tree) {
            if (matches_within(suggest_tree(*tree, model, g, p.t_p, greedy), target, 1)) ++hits;
          } else {
            const auto src = tree_to_tokens(g, p.t_p);
            const auto types = terminal_types(g, p.t_n);
            auto beam = beam_tokens(model.params, g, model.vocab, src, types, build_scope(g, p.t_p), 1);
            if (!beam.empty() && beam.front().tokens == target) ++hits;
          }
        }
        return percent(hits, valid.size());
      },
      [&] { best = model.params; });

  model.params = std::move(best);
  return model;
}

bool matches_within(const SuggestResult& res, const std::vector<std::string>& target, int k) {
  const size_t n = std::min(res.suggestions.size(), static_cast<size_t>(std::max(k, 0)));
  for (size_t i = 0; i < n; ++i)
    if (res.suggestions[i].tokens == target) return true;
  return false;
}

EvalReport evaluate(const Grammar& g, const TreeModel& tree, const TokenModel& token, std::span<const EditPair> pairs,
                    std::vector<int> ks, SuggestConfig cfg) {
  check_grammar(g, tree, token);
  if (ks.empty()) throw std::invalid_argument("evaluate: no K values");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1) throw std::invalid_argument("evaluate: K values must be >= 1");
  cfg.k = ks.back();
  cfg.validate();

  EvalReport r;
  r.ks = ks;
  r.k_tree = cfg.k_tree;
  r.pairs = pairs.size();
  std::vector<size_t> hits(ks.size(), 0), hits_conc(ks.size(), 0);
  size_t tree_hits = 0;
  for (const auto& p : pairs) {
    const auto src = tree_to_tokens(g, p.t_p);
    const auto tgt = tree_to_tokens(g, p.t_n);
    const bool conc = concretizable(g, token.vocab, src, tgt, build_scope(g, p.t_p));
    (conc ? r.concretizable : r.unconcretizable)++;

    const SuggestResult res = suggest_tree(tree, token, g, p.t_p, cfg);
    const auto target = token_strings(g, p.t_n);
    for (size_t i = 0; i < ks.size(); ++i) {
      if (matches_within(res, target, ks[i])) {
        ++hits[i];
        if (conc) ++hits_conc[i];
      }
    }
    const RuleSequence gold = tree_to_rules(p.t_n);
    if (std::any_of(res.skeletons.begin(), res.skeletons.end(), [&](const auto& s) { return s.rules == gold; }))
      ++tree_hits;
  }
  for (size_t i = 0; i < ks.size(); ++i) {
    r.accuracy.push_back(percent(hits[i], r.pairs));
    r.accuracy_concretizable.push_back(percent(hits_conc[i], r.concretizable));
  }
  r.tree_accuracy = percent(tree_hits, r.pairs);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["pairs"] = pairs;
  j["concretizable"] = concretizable;
  j["unconcretizable"] = unconcretizable;
  j["k_tree"] = k_tree;
  j["tree_accuracy"] = tree_accuracy;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (size_t i = 0; i < ks.size(); ++i)
    rows.push_back({{"k", ks[i]}, {"accuracy", accuracy[i]}, {"accuracy_concretizable", accuracy_concretizable[i]}});
  j["top_k"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-6s %10s %15s\n", "K", "all (%)", "concretizable (%)");
  out << buf;
  for (size_t i = 0; i < ks.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-6d %10.2f %15.2f\n", ks[i], accuracy[i], accuracy_concretizable[i]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "tree top-%d: %.2f%%\n", k_tree, tree_accuracy);
  out << buf;
  std::snprintf(buf, sizeof buf, "pairs: %zu  concretizable: %zu  unconcretizable: %zu\n", pairs, concretizable,
                unconcretizable);
  out << buf;
  return out.str();
}

}  // namespace treedit

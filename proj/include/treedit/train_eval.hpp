#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "treedit/editmine.hpp"
#include "treedit/suggest.hpp"
#include "treedit/token_model.hpp"
#include "treedit/tree_model.hpp"

namespace treedit {

struct TrainConfig {
  int n_epoch = 30;
  int valid_patience = 5;
  double lr = 0.5;
  double lr_decay = 0.5;
  double clip = 5.0;
  std::uint64_t seed = 1;
  int min_freq = 2;
  int max_steps = 60;
  ModelDims dims;

  // Throws std::invalid_argument on n_epoch < 1, valid_patience < 1,
  // lr <= 0 or lr_decay outside (0, 1].
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean per pair
  double val_metric = 0.0;  // top-1 exact match, percent
  double lr = 0.0;          // rate used during the epoch
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_metric = 0.0;
  size_t skipped = 0;  // token model: unconcretizable training pairs

  // epoch,train_loss,val_metric,lr
  void write_csv(std::ostream& out) const;
};

class EmptyTrainingSet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tree model trained on rule sequences of split.train and validated by
// greedy top-1 rule-sequence match on split.valid (split.train when valid is
// empty). `resume` continues from an existing model.
TreeModel train_tree(const Grammar& g, const DatasetSplit& split, const TrainConfig& cfg, TrainLog* log = nullptr,
                     const TreeModel* resume = nullptr, std::ostream* progress = nullptr);

// Token model trained on (token, type) sequences. The vocabulary comes from
// split.train unless resuming. Validation is greedy top-1 over the full
// pipeline when `tree` is given, otherwise greedy filling of the gold
// skeleton.
TokenModel train_token(const Grammar& g, const DatasetSplit& split, const TrainConfig& cfg, TrainLog* log = nullptr,
                       const TokenModel* resume = nullptr, const TreeModel* tree = nullptr,
                       std::ostream* progress = nullptr);

// Token frequency counts training pairs, not occurrences.
Vocabulary build_vocabulary(const Grammar& g, std::span<const EditPair> pairs, int min_freq);

struct EvalReport {
  std::vector<int> ks;
  std::vector<double> accuracy;                // percent, all pairs
  std::vector<double> accuracy_concretizable;  // percent, concretizable pairs only
  double tree_accuracy = 0.0;                  // percent, gold skeleton within the first k_tree
  int k_tree = 0;
  size_t pairs = 0;
  size_t concretizable = 0;
  size_t unconcretizable = 0;

  std::string to_json() const;
  std::string to_table() const;
};

// Runs suggest_tree with K = max(ks) on each pair. Throws GrammarMismatch
// when either model was trained on another grammar.
EvalReport evaluate(const Grammar& g, const TreeModel& tree, const TokenModel& token, std::span<const EditPair> pairs,
                    std::vector<int> ks, SuggestConfig cfg);

// Exact match of the target's token sequence among the first k suggestions.
bool matches_within(const SuggestResult& res, const std::vector<std::string>& target, int k);

}  // namespace treedit

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "treedit/grammar.hpp"
#include "treedit/neural.hpp"
#include "treedit/syntax.hpp"

namespace treedit {

// Rule-sequence encoder/decoder over the productions of one grammar.
struct TreeModelParams {
  int num_rules = 0;
  int d_e = 0;
  int d_h = 0;
  Param rule_embed;  // d_e x (num_rules + 1); the last column embeds BOS
  LstmParams encoder;
  LstmParams decoder;  // input is [rule embedding; attention context]
  Param out_w;         // num_rules x d_h
  Param out_b;         // num_rules x 1

  TreeModelParams() = default;
  TreeModelParams(int num_rules, int d_e, int d_h);

  void init(std::mt19937_64& rng, double scale);
  ParamList params();
  int bos() const { return num_rules; }
};

// A trained tree model bound to the grammar it was trained with.
struct TreeModel {
  TreeModelParams params;
  ModelDims dims;
  std::uint64_t grammar_hash = 0;
  // Root symbols seen in training, by name, with their frequencies.
  std::map<std::string, int> root_counts;
};

TreeModel make_tree_model(const Grammar& g, const ModelDims& dims, std::uint64_t seed);

struct EncodedSource {
  Mat states;  // one column per source position
  std::vector<LstmCache> caches;
  LstmState final;
};

// h_i = LSTM(h_{i-1}, embed(R_i)) from a zero state. Throws
// std::out_of_range on an unknown rule id and std::invalid_argument on an
// empty sequence.
EncodedSource encode_rules(const TreeModelParams& p, std::span<const ProductionId> rules, bool keep_cache = false);

struct TreeDecoderState {
  LstmState lstm;
  std::vector<SymbolId> frontier;  // back() is the node expanded next
  RuleSequence emitted;
  double log_prob = 0.0;

  bool complete() const { return frontier.empty(); }
};

// Decoder initialised from the final encoder state with `root` as the only
// pending nonterminal.
TreeDecoderState start_tree_decoding(const EncodedSource& enc, SymbolId root);

struct RuleStep {
  Vec dist;  // over all productions; zero outside rules_for(frontier)
  LstmState next;
  Attention attention;
  LstmCache cache;
};

RuleStep decode_rule_step(const TreeModelParams& p, const Grammar& g, const TreeDecoderState& state,
                          const EncodedSource& enc);

// Pops the frontier, pushes the rule's nonterminals right-to-left and
// records the rule with its log-probability.
void apply_rule(const Grammar& g, TreeDecoderState& state, ProductionId rule, double log_prob);

// Summed cross-entropy of `target` given `source`. With `backprop` set,
// gradients are accumulated into p (callers zero them). Throws
// DerivationError when the target cannot be replayed from `root`.
double tree_teacher_forced_loss(TreeModelParams& p, const Grammar& g, std::span<const ProductionId> source,
                                std::span<const ProductionId> target, SymbolId root, bool backprop);

// Log-probability of `target` under the model (no gradients).
double score_rules(const TreeModelParams& p, const Grammar& g, std::span<const ProductionId> source,
                   std::span<const ProductionId> target, SymbolId root);

struct RuleHypothesis {
  RuleSequence rules;
  double log_prob = 0.0;
};

// Beam search restricted to rules whose head matches the frontier. Returns
// at most `width` complete derivations ordered by log-probability, ties by
// rule ids.
std::vector<RuleHypothesis> beam_rules(const TreeModelParams& p, const Grammar& g,
                                       std::span<const ProductionId> source, SymbolId root, int width,
                                       int max_steps);

}  // namespace treedit

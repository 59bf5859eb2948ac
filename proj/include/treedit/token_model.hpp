#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "treedit/grammar.hpp"
#include "treedit/neural.hpp"
#include "treedit/syntax.hpp"
#include "treedit/vocab.hpp"

namespace treedit {

// Encoder over (token, type) pairs and a type-conditioned token decoder.
struct TokenModelParams {
  int vocab_size = 0;
  int num_types = 0;
  int d_e = 0;
  int d_h = 0;
  Param token_embed;  // d_e x (vocab_size + 1); last column is BOS
  Param type_embed;   // d_e x (num_types + 1); last column is BOS
  LstmParams encoder;  // input [token; type]
  LstmParams decoder;  // input [prev token; current type; attention context]
  Param out_w;         // vocab_size x d_h
  Param out_b;         // vocab_size x 1

  TokenModelParams() = default;
  TokenModelParams(int vocab_size, int num_types, int d_e, int d_h);

  void init(std::mt19937_64& rng, double scale);
  ParamList params();
  int bos_token() const { return vocab_size; }
  int bos_type() const { return num_types; }
};

struct TokenModel {
  TokenModelParams params;
  ModelDims dims;
  std::uint64_t grammar_hash = 0;
  Vocabulary vocab;
};

TokenModel make_token_model(const Grammar& g, Vocabulary vocab, const ModelDims& dims, std::uint64_t seed);

// Identifier counts over the token sequences of t_p and t_n, ready for
// Vocabulary::build.
void count_tokens(const Grammar& g, const ParseTree& t, std::map<std::pair<std::string, TerminalKind>, int>& counts);

// VAR = VAR leaves of t_p plus {this, super}; METHOD and TYPE = the
// corresponding leaves.
ScopeInfo build_scope(const Grammar& g, const ParseTree& t_p);

struct EncodedTokens {
  Mat states;  // one column per source token (a single BOS column when empty)
  std::vector<LstmCache> caches;
  std::vector<int> token_ids;  // per column, <unknown> for OOV
  std::vector<int> type_ids;   // per column, dense terminal index
  LstmState final;
};

EncodedTokens encode_tokens(const TokenModelParams& p, const Grammar& g, const Vocabulary& vocab,
                            std::span<const AugToken> source, bool keep_cache = false);

struct TokenDecoderState {
  LstmState lstm;
  int prev = -1;  // vocabulary id of the last emitted token, -1 before the first
  std::vector<std::string> tokens;
  double log_prob = 0.0;
};

TokenDecoderState start_token_decoding(const EncodedTokens& enc);

struct TokenStep {
  Vec dist;  // over the vocabulary; zero outside the mask
  LstmState next;
  Attention attention;
  LstmCache cache;
};

TokenStep decode_token_step(const TokenModelParams& p, const Grammar& g, const Vocabulary& vocab,
                            const TokenDecoderState& state, const EncodedTokens& enc, SymbolId type,
                            const ScopeInfo& scope);

// Replacement for an emitted <unknown>: the in-scope source token of the
// same terminal type with the largest attention weight, or else the
// largest-weight source token the slot admits lexically. Ties go to the
// earliest position. nullopt when the source offers nothing usable.
//
// With a vocabulary, compatible positions whose token the slot's mask
// cannot name are considered first: <unknown> stands for exactly those
// tokens, since a nameable one would have been emitted directly.
std::optional<std::string> copy_resolve(const Grammar& g, const Vec& attention, std::span<const AugToken> source,
                                        SymbolId type, const ScopeInfo& scope, const Vocabulary* vocab = nullptr);

// Training label for one target token: its own id when the mask allows it,
// <unknown> when it can only be copied from the source, nullopt when the
// model cannot produce it at all.
std::optional<int> token_label(const Grammar& g, const Vocabulary& vocab, const AugToken& target,
                               std::span<const AugToken> source, const ScopeInfo& scope);

bool concretizable(const Grammar& g, const Vocabulary& vocab, std::span<const AugToken> source,
                   std::span<const AugToken> target, const ScopeInfo& scope);

class UnconcretizableTarget : public std::runtime_error {
 public:
  UnconcretizableTarget(size_t position, const std::string& token)
      : std::runtime_error("target token '" + token + "' at position " + std::to_string(position) +
                           " is neither in the vocabulary nor in the source"),
        position_(position) {}
  size_t position() const { return position_; }

 private:
  size_t position_;
};

// Summed cross-entropy over the target's labels; accumulates gradients into
// p when `backprop` is set. Throws UnconcretizableTarget.
double token_teacher_forced_loss(TokenModelParams& p, const Grammar& g, const Vocabulary& vocab,
                                 std::span<const AugToken> source, std::span<const AugToken> target,
                                 const ScopeInfo& scope, bool backprop);

struct TokenHypothesis {
  std::vector<std::string> tokens;
  double log_prob = 0.0;
};

// Fills every slot of `types` in order with a beam of `width`. An emitted
// <unknown> is replaced through copy_resolve and scored with the <unknown>
// probability. Ties break on the token strings.
std::vector<TokenHypothesis> beam_tokens(const TokenModelParams& p, const Grammar& g, const Vocabulary& vocab,
                                         std::span<const AugToken> source, std::span<const SymbolId> types,
                                         const ScopeInfo& scope, int width);

}  // namespace treedit

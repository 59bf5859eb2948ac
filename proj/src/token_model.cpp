#include "treedit/token_model.hpp"

#include <algorithm>
#include <cmath>

namespace treedit {

TokenModelParams::TokenModelParams(int vocab, int types, int embed, int hidden)
    : vocab_size(vocab),
      num_types(types),
      d_e(embed),
      d_h(hidden),
      token_embed("token.token_embed", embed, vocab + 1),
      type_embed("token.type_embed", embed, types + 1),
      encoder("token.encoder", 2 * embed, hidden),
      decoder("token.decoder", 2 * embed + hidden, hidden),
      out_w("token.out_w", vocab, hidden),
      out_b("token.out_b", vocab, 1) {}

void TokenModelParams::init(std::mt19937_64& rng, double scale) {
  init_uniform(token_embed, rng, scale);
  init_uniform(type_embed, rng, scale);
  encoder.init(rng, scale);
  decoder.init(rng, scale);
  init_uniform(out_w, rng, scale);
  init_uniform(out_b, rng, scale);
}

ParamList TokenModelParams::params() {
  ParamList out{&token_embed, &type_embed};
  for (Param* q : encoder.params()) out.push_back(q);
  for (Param* q : decoder.params()) out.push_back(q);
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

TokenModel make_token_model(const Grammar& g, Vocabulary vocab, const ModelDims& dims, std::uint64_t seed) {
  TokenModel m;
  m.dims = dims;
  m.grammar_hash = g.hash();
  m.params = TokenModelParams(vocab.size(), static_cast<int>(g.terminals().size()), dims.embed, dims.hidden);
  m.vocab = std::move(vocab);
  std::mt19937_64 rng(seed);
  m.params.init(rng, dims.init_scale);
  return m;
}

void count_tokens(const Grammar& g, const ParseTree& t, std::map<std::pair<std::string, TerminalKind>, int>& counts) {
  for (const auto& a : tree_to_tokens(g, t)) ++counts[{a.token, g.symbol(a.type).kind}];
}

ScopeInfo build_scope(const Grammar& g, const ParseTree& t_p) {
  ScopeInfo s;
  s.vars = {"this", "super"};
  for (const auto& a : tree_to_tokens(g, t_p)) {
    switch (g.symbol(a.type).kind) {
      case TerminalKind::Var: s.vars.insert(a.token); break;
      case TerminalKind::Method: s.methods.insert(a.token); break;
      case TerminalKind::Type: s.types.insert(a.token); break;
      default: break;
    }
  }
  return s;
}

EncodedTokens encode_tokens(const TokenModelParams& p, const Grammar& g, const Vocabulary& vocab,
                            std::span<const AugToken> source, bool keep_cache) {
  EncodedTokens enc;
  if (source.empty()) {
    enc.token_ids.push_back(p.bos_token());
    enc.type_ids.push_back(p.bos_type());
  } else {
    for (const auto& a : source) {
      enc.token_ids.push_back(vocab.id_or_unknown(a.token));
      enc.type_ids.push_back(g.terminal_index(a.type));
    }
  }
  const auto n = enc.token_ids.size();
  enc.states.resize(p.d_h, static_cast<Eigen::Index>(n));
  if (keep_cache) enc.caches.resize(n);
  LstmState s = LstmState::zero(p.d_h);
  Vec x(2 * p.d_e);
  for (size_t i = 0; i < n; ++i) {
    x << p.token_embed.value.col(enc.token_ids[i]), p.type_embed.value.col(enc.type_ids[i]);
    s = lstm_step(p.encoder, s, x, keep_cache ? &enc.caches[i] : nullptr);
    enc.states.col(static_cast<Eigen::Index>(i)) = s.h;
  }
  enc.final = std::move(s);
  return enc;
}

TokenDecoderState start_token_decoding(const EncodedTokens& enc) {
  TokenDecoderState st;
  st.lstm = enc.final;
  return st;
}

TokenStep decode_token_step(const TokenModelParams& p, const Grammar& g, const Vocabulary& vocab,
                            const TokenDecoderState& state, const EncodedTokens& enc, SymbolId type,
                            const ScopeInfo& scope) {
  TokenStep step;
  step.attention = attend(state.lstm.h, enc.states);
  const int prev = state.prev < 0 ? p.bos_token() : state.prev;
  Vec x(2 * p.d_e + p.d_h);
  x << p.token_embed.value.col(prev), p.type_embed.value.col(g.terminal_index(type)), step.attention.context;
  step.next = lstm_step(p.decoder, state.lstm, x, &step.cache);
  Vec logits = p.out_w.value * step.next.h + p.out_b.value.col(0);
  step.dist = masked_softmax(logits, tokens_for(g, vocab, type, scope));
  return step;
}

namespace {

bool copy_compatible(const Grammar& g, const AugToken& a, SymbolId type, const ScopeInfo& scope) {
  if (a.type != type) return false;
  const TerminalKind kind = g.symbol(type).kind;
  return !is_identifier_kind(kind) || scope.contains(kind, a.token);
}

}  // namespace

std::optional<std::string> copy_resolve(const Grammar& g, const Vec& attention, std::span<const AugToken> source,
                                        SymbolId type, const ScopeInfo& scope, const Vocabulary* vocab) {
  const auto n = std::min<size_t>(source.size(), static_cast<size_t>(attention.size()));
  std::optional<size_t> best;
  if (vocab) {
    const auto allowed = tokens_for(g, *vocab, type, scope);
    for (size_t i = 0; i < n; ++i) {
      if (!copy_compatible(g, source[i], type, scope)) continue;
      const int id = vocab->id_or_unknown(source[i].token);
      if (id != Vocabulary::kUnknown && std::binary_search(allowed.begin(), allowed.end(), id)) continue;
      if (!best || attention(i) > attention(*best)) best = i;
    }
  }
  if (!best) {
    for (size_t i = 0; i < n; ++i)
      if (copy_compatible(g, source[i], type, scope) && (!best || attention(i) > attention(*best))) best = i;
  }
  if (!best) {
    for (size_t i = 0; i < n; ++i)
      if (g.admits(type, source[i].token) && (!best || attention(i) > attention(*best))) best = i;
  }
  if (!best) return std::nullopt;
  return source[*best].token;
}

std::optional<int> token_label(const Grammar& g, const Vocabulary& vocab, const AugToken& target,
                               std::span<const AugToken> source, const ScopeInfo& scope) {
  const auto allowed = tokens_for(g, vocab, target.type, scope);
  auto permitted = [&](int id) { return std::binary_search(allowed.begin(), allowed.end(), id); };
  if (auto id = vocab.find(target.token); id && *id != Vocabulary::kUnknown && permitted(*id)) return *id;
  if (!permitted(Vocabulary::kUnknown)) return std::nullopt;
  for (const auto& a : source)
    if (a.token == target.token && copy_compatible(g, a, target.type, scope)) return Vocabulary::kUnknown;
  return std::nullopt;
}

bool concretizable(const Grammar& g, const Vocabulary& vocab, std::span<const AugToken> source,
                   std::span<const AugToken> target, const ScopeInfo& scope) {
  return std::all_of(target.begin(), target.end(),
                     [&](const AugToken& t) { return token_label(g, vocab, t, source, scope).has_value(); });
}

namespace {

struct ForcedTokenStep {
  TokenStep step;
  int prev = 0;
  int type = 0;
  int label = 0;
};

}  // namespace

double token_teacher_forced_loss(TokenModelParams& p, const Grammar& g, const Vocabulary& vocab,
                                 std::span<const AugToken> source, std::span<const AugToken> target,
                                 const ScopeInfo& scope, bool backprop) {
  std::vector<int> labels;
  labels.reserve(target.size());
  for (size_t k = 0; k < target.size(); ++k) {
    auto label = token_label(g, vocab, target[k], source, scope);
    if (!label) throw UnconcretizableTarget(k, target[k].token);
    labels.push_back(*label);
  }

  EncodedTokens enc = encode_tokens(p, g, vocab, source, backprop);
  TokenDecoderState state = start_token_decoding(enc);
  std::vector<ForcedTokenStep> steps;
  double loss = 0.0;
  for (size_t k = 0; k < target.size(); ++k) {
    ForcedTokenStep fs;
    fs.prev = state.prev < 0 ? p.bos_token() : state.prev;
    fs.type = g.terminal_index(target[k].type);
    fs.label = labels[k];
    fs.step = decode_token_step(p, g, vocab, state, enc, target[k].type, scope);
    loss += cross_entropy(fs.step.dist, fs.label);
    state.lstm = fs.step.next;
    state.prev = fs.label;
    if (backprop) steps.push_back(std::move(fs));
  }
  if (!backprop) return loss;

  const int d_e = p.d_e, d_h = p.d_h;
  Mat d_enc = Mat::Zero(d_h, enc.states.cols());
  Vec dh = Vec::Zero(d_h), dc = Vec::Zero(d_h);
  for (size_t k = steps.size(); k-- > 0;) {
    const ForcedTokenStep& fs = steps[k];
    Vec dlogits = cross_entropy_grad(fs.step.dist, fs.label);
    p.out_w.grad.noalias() += dlogits * fs.step.next.h.transpose();
    p.out_b.grad.col(0) += dlogits;
    dh.noalias() += p.out_w.value.transpose() * dlogits;
    LstmBackward back = lstm_backward(p.decoder, fs.step.cache, dh, dc);
    p.token_embed.grad.col(fs.prev) += back.dx.head(d_e);
    p.type_embed.grad.col(fs.type) += back.dx.segment(d_e, d_e);
    Vec dctx = back.dx.tail(d_h);
    Vec query = fs.step.cache.z.tail(d_h);
    Vec dquery = back.dh_prev;
    attend_backward(query, enc.states, fs.step.attention.weights, dctx, dquery, d_enc);
    dh = std::move(dquery);
    dc = back.dc_prev;
  }

  const Eigen::Index n = enc.states.cols();
  Vec dh_enc = dh + d_enc.col(n - 1);
  Vec dc_enc = dc;
  for (Eigen::Index i = n; i-- > 0;) {
    const auto u = static_cast<size_t>(i);
    LstmBackward back = lstm_backward(p.encoder, enc.caches[u], dh_enc, dc_enc);
    p.token_embed.grad.col(enc.token_ids[u]) += back.dx.head(d_e);
    p.type_embed.grad.col(enc.type_ids[u]) += back.dx.tail(d_e);
    dh_enc = back.dh_prev;
    if (i > 0) dh_enc += d_enc.col(i - 1);
    dc_enc = back.dc_prev;
  }
  return loss;
}

namespace {
bool token_hyp_before(const TokenDecoderState& a, const TokenDecoderState& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}
}  // namespace

std::vector<TokenHypothesis> beam_tokens(const TokenModelParams& p, const Grammar& g, const Vocabulary& vocab,
                                         std::span<const AugToken> source, std::span<const SymbolId> types,
                                         const ScopeInfo& scope, int width) {
  if (width < 1) throw std::invalid_argument("beam_tokens: width must be >= 1");
  const EncodedTokens enc = encode_tokens(p, g, vocab, source);
  std::vector<TokenDecoderState> beam{start_token_decoding(enc)};
  const size_t k = static_cast<size_t>(width);

  for (SymbolId type : types) {
    std::vector<TokenDecoderState> pool;
    for (const auto& hyp : beam) {
      TokenStep ts = decode_token_step(p, g, vocab, hyp, enc, type, scope);
      std::optional<std::string> copied;
      bool copy_tried = false;
      for (int id : tokens_for(g, vocab, type, scope)) {
        const double pr = ts.dist(id);
        if (pr <= 0.0) continue;
        std::string tok;
        if (id == Vocabulary::kUnknown) {
          if (!copy_tried) {
            copied = copy_resolve(g, ts.attention.weights, source, type, scope, &vocab);
            copy_tried = true;
          }
          if (!copied) continue;
          tok = *copied;
        } else {
          tok = vocab.token(id);
        }
        TokenDecoderState child;
        child.lstm = ts.next;
        child.prev = id;
        child.tokens = hyp.tokens;
        child.tokens.push_back(std::move(tok));
        child.log_prob = hyp.log_prob + std::log(pr);
        pool.push_back(std::move(child));
      }
    }
    std::sort(pool.begin(), pool.end(), token_hyp_before);
    if (pool.size() > k) pool.resize(k);
    beam = std::move(pool);
    if (beam.empty()) break;
  }

  std::vector<TokenHypothesis> out;
  out.reserve(beam.size());
  for (auto& h : beam) out.push_back({std::move(h.tokens), h.log_prob});
  return out;
}

}  // namespace treedit

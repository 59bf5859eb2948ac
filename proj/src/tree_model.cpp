#include "treedit/tree_model.hpp"

#include <algorithm>
#include <cmath>

namespace treedit {

TreeModelParams::TreeModelParams(int rules, int embed, int hidden)
    : num_rules(rules),
      d_e(embed),
      d_h(hidden),
      rule_embed("tree.rule_embed", embed, rules + 1),
      encoder("tree.encoder", embed, hidden),
      decoder("tree.decoder", embed + hidden, hidden),
      out_w("tree.out_w", rules, hidden),
      out_b("tree.out_b", rules, 1) {}

void TreeModelParams::init(std::mt19937_64& rng, double scale) {
  init_uniform(rule_embed, rng, scale);
  encoder.init(rng, scale);
  decoder.init(rng, scale);
  init_uniform(out_w, rng, scale);
  init_uniform(out_b, rng, scale);
}

ParamList TreeModelParams::params() {
  ParamList out{&rule_embed};
  for (Param* q : encoder.params()) out.push_back(q);
  for (Param* q : decoder.params()) out.push_back(q);
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

TreeModel make_tree_model(const Grammar& g, const ModelDims& dims, std::uint64_t seed) {
  TreeModel m;
  m.dims = dims;
  m.grammar_hash = g.hash();
  m.params = TreeModelParams(static_cast<int>(g.num_productions()), dims.embed, dims.hidden);
  std::mt19937_64 rng(seed);
  m.params.init(rng, dims.init_scale);
  return m;
}

EncodedSource encode_rules(const TreeModelParams& p, std::span<const ProductionId> rules, bool keep_cache) {
  if (rules.empty()) throw std::invalid_argument("encode_rules: empty source sequence");
  EncodedSource enc;
  enc.states.resize(p.d_h, static_cast<Eigen::Index>(rules.size()));
  if (keep_cache) enc.caches.resize(rules.size());
  LstmState s = LstmState::zero(p.d_h);
  for (size_t i = 0; i < rules.size(); ++i) {
    if (rules[i] < 0 || rules[i] >= p.num_rules) throw std::out_of_range("encode_rules: unknown rule id");
    s = lstm_step(p.encoder, s, p.rule_embed.value.col(rules[i]), keep_cache ? &enc.caches[i] : nullptr);
    enc.states.col(static_cast<Eigen::Index>(i)) = s.h;
  }
  enc.final = std::move(s);
  return enc;
}

TreeDecoderState start_tree_decoding(const EncodedSource& enc, SymbolId root) {
  TreeDecoderState st;
  st.lstm = enc.final;
  st.frontier.push_back(root);
  return st;
}

RuleStep decode_rule_step(const TreeModelParams& p, const Grammar& g, const TreeDecoderState& state,
                          const EncodedSource& enc) {
  if (state.frontier.empty()) throw std::logic_error("decode_rule_step: derivation already complete");
  RuleStep step;
  step.attention = attend(state.lstm.h, enc.states);
  const int prev = state.emitted.empty() ? p.bos() : state.emitted.back();
  Vec x(p.d_e + p.d_h);
  x << p.rule_embed.value.col(prev), step.attention.context;
  step.next = lstm_step(p.decoder, state.lstm, x, &step.cache);
  Vec logits = p.out_w.value * step.next.h + p.out_b.value.col(0);
  step.dist = masked_softmax(logits, g.rules_for(state.frontier.back()));
  return step;
}

void apply_rule(const Grammar& g, TreeDecoderState& state, ProductionId rule, double log_prob) {
  const auto& prod = g.production(rule);
  if (state.frontier.empty() || state.frontier.back() != prod.lhs)
    throw std::logic_error("apply_rule: rule head does not match the frontier");
  state.frontier.pop_back();
  for (size_t i = prod.rhs.size(); i-- > 0;)
    if (!g.is_terminal(prod.rhs[i])) state.frontier.push_back(prod.rhs[i]);
  state.emitted.push_back(rule);
  state.log_prob += log_prob;
}

namespace {

struct ForcedStep {
  RuleStep step;
  int target = 0;
  int prev = 0;
};

}  // namespace

double tree_teacher_forced_loss(TreeModelParams& p, const Grammar& g, std::span<const ProductionId> source,
                                std::span<const ProductionId> target, SymbolId root, bool backprop) {
  EncodedSource enc = encode_rules(p, source, backprop);
  TreeDecoderState state = start_tree_decoding(enc, root);
  std::vector<ForcedStep> steps;
  steps.reserve(target.size());
  double loss = 0.0;
  for (size_t k = 0; k < target.size(); ++k) {
    const ProductionId rule = target[k];
    if (rule < 0 || rule >= p.num_rules)
      throw DerivationError(DerivationError::Kind::UnknownRule, k + 1, "unknown target rule id");
    if (state.complete())
      throw DerivationError(DerivationError::Kind::Surplus, k + 1, "target has rules after the tree completed");
    if (g.production(rule).lhs != state.frontier.back())
      throw DerivationError(DerivationError::Kind::Infeasible, k + 1,
                            "target rule " + g.production_string(rule) + " does not match frontier " +
                                g.name(state.frontier.back()));
    ForcedStep fs;
    fs.prev = state.emitted.empty() ? p.bos() : state.emitted.back();
    fs.step = decode_rule_step(p, g, state, enc);
    fs.target = rule;
    const double step_loss = cross_entropy(fs.step.dist, rule, g.rules_for(state.frontier.back()));
    loss += step_loss;
    state.lstm = fs.step.next;
    apply_rule(g, state, rule, -step_loss);
    if (backprop) steps.push_back(std::move(fs));
  }
  if (!state.complete())
    throw DerivationError(DerivationError::Kind::Incomplete, target.size(), "target derivation is incomplete");
  if (!backprop) return loss;

  const int d_e = p.d_e, d_h = p.d_h;
  Mat d_enc = Mat::Zero(d_h, enc.states.cols());
  Vec dh = Vec::Zero(d_h), dc = Vec::Zero(d_h);
  for (size_t k = steps.size(); k-- > 0;) {
    const ForcedStep& fs = steps[k];
    Vec dlogits = cross_entropy_grad(fs.step.dist, fs.target);
    p.out_w.grad.noalias() += dlogits * fs.step.next.h.transpose();
    p.out_b.grad.col(0) += dlogits;
    dh.noalias() += p.out_w.value.transpose() * dlogits;
    LstmBackward back = lstm_backward(p.decoder, fs.step.cache, dh, dc);
    p.rule_embed.grad.col(fs.prev) += back.dx.head(d_e);
    Vec dctx = back.dx.tail(d_h);
    Vec query = fs.step.cache.z.tail(d_h);
    Vec dquery = back.dh_prev;
    attend_backward(query, enc.states, fs.step.attention.weights, dctx, dquery, d_enc);
    dh = std::move(dquery);
    dc = back.dc_prev;
  }

  // The decoder started from the encoder's final state.
  const Eigen::Index tau = enc.states.cols();
  Vec dh_enc = dh + d_enc.col(tau - 1);
  Vec dc_enc = dc;
  for (Eigen::Index i = tau; i-- > 0;) {
    LstmBackward back = lstm_backward(p.encoder, enc.caches[static_cast<size_t>(i)], dh_enc, dc_enc);
    p.rule_embed.grad.col(source[static_cast<size_t>(i)]) += back.dx;
    dh_enc = back.dh_prev;
    if (i > 0) dh_enc += d_enc.col(i - 1);
    dc_enc = back.dc_prev;
  }
  return loss;
}

double score_rules(const TreeModelParams& p, const Grammar& g, std::span<const ProductionId> source,
                   std::span<const ProductionId> target, SymbolId root) {
  return -tree_teacher_forced_loss(const_cast<TreeModelParams&>(p), g, source, target, root, false);
}

namespace {
bool hyp_before(const TreeDecoderState& a, const TreeDecoderState& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.emitted < b.emitted;
}
}  // namespace

std::vector<RuleHypothesis> beam_rules(const TreeModelParams& p, const Grammar& g,
                                       std::span<const ProductionId> source, SymbolId root, int width,
                                       int max_steps) {
  if (width < 1) throw std::invalid_argument("beam_rules: width must be >= 1");
  EncodedSource enc = encode_rules(p, source);
  std::vector<TreeDecoderState> active{start_tree_decoding(enc, root)};
  std::vector<TreeDecoderState> finished;
  const size_t k = static_cast<size_t>(width);

  for (int step = 0; step < max_steps && !active.empty(); ++step) {
    std::vector<TreeDecoderState> pool;
    for (const auto& hyp : active) {
      RuleStep rs = decode_rule_step(p, g, hyp, enc);
      for (ProductionId r : g.rules_for(hyp.frontier.back())) {
        const double pr = rs.dist(r);
        if (pr <= 0.0) continue;
        TreeDecoderState child;
        child.lstm = rs.next;
        child.frontier = hyp.frontier;
        child.emitted = hyp.emitted;
        child.log_prob = hyp.log_prob;
        apply_rule(g, child, r, std::log(pr));
        pool.push_back(std::move(child));
      }
    }
    std::sort(pool.begin(), pool.end(), hyp_before);
    if (pool.size() > k) pool.resize(k);
    active.clear();
    for (auto& h : pool) (h.complete() ? finished : active).push_back(std::move(h));

    if (finished.size() >= k) {
      std::sort(finished.begin(), finished.end(), hyp_before);
      finished.resize(k);
      // Extending a hypothesis only lowers its score.
      if (active.empty() || active.front().log_prob < finished.back().log_prob) break;
    }
  }

  std::sort(finished.begin(), finished.end(), hyp_before);
  if (finished.size() > k) finished.resize(k);
  std::vector<RuleHypothesis> out;
  out.reserve(finished.size());
  for (auto& f : finished) out.push_back({std::move(f.emitted), f.log_prob});
  return out;
}

}  // namespace treedit

#include "treedit/gradcheck.hpp"

#include "treedit/editmine.hpp"
#include "treedit/token_model.hpp"
#include "treedit/tree_model.hpp"

namespace treedit {

namespace {

EditPair toy_pair(const Grammar& g) {
  const PatchRecord r{"toy", 0, "return super . equals ( object ) ;", "return object == this ;"};
  auto res = extract_pairs(std::span<const PatchRecord>(&r, 1), g, ExtractionConfig{});
  if (res.pairs.size() != 1) throw std::logic_error("gradcheck: toy pair did not extract");
  return res.pairs.front();
}

void corrupt_first(const ParamList& params) { params.front()->grad(0, 0) += 1.0; }

}  // namespace

std::vector<GradCheckResult> gradcheck_tree(const Grammar& g, const GradCheckOptions& opt) {
  const EditPair pair = toy_pair(g);
  const RuleSequence src = tree_to_rules(pair.t_p), tgt = tree_to_rules(pair.t_n);
  TreeModel m = make_tree_model(g, {opt.embed, opt.hidden, opt.init_scale}, opt.seed);
  const ParamList params = m.params.params();
  return grad_check(
      params,
      [&] {
        zero_grads(params);
        double loss = tree_teacher_forced_loss(m.params, g, src, tgt, pair.root(), true);
        if (opt.corrupt) corrupt_first(params);
        return loss;
      },
      [&] { return tree_teacher_forced_loss(m.params, g, src, tgt, pair.root(), false); });
}

std::vector<GradCheckResult> gradcheck_token(const Grammar& g, const GradCheckOptions& opt) {
  const EditPair pair = toy_pair(g);
  const auto src = tree_to_tokens(g, pair.t_p), tgt = tree_to_tokens(g, pair.t_n);
  const ScopeInfo scope = build_scope(g, pair.t_p);
  std::map<std::pair<std::string, TerminalKind>, int> counts{{{"this", TerminalKind::Var}, 2},
                                                             {{"super", TerminalKind::Var}, 2},
                                                             {{"equals", TerminalKind::Method}, 2}};
  TokenModel m = make_token_model(g, Vocabulary::build(g, counts, 2), {opt.embed, opt.hidden, opt.init_scale}, opt.seed);
  const ParamList params = m.params.params();
  return grad_check(
      params,
      [&] {
        zero_grads(params);
        double loss = token_teacher_forced_loss(m.params, g, m.vocab, src, tgt, scope, true);
        if (opt.corrupt) corrupt_first(params);
        return loss;
      },
      [&] { return token_teacher_forced_loss(m.params, g, m.vocab, src, tgt, scope, false); });
}

std::vector<GradCheckResult> gradcheck_linear(const GradCheckOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  Param w("linear.out_w", 5, opt.hidden), b("linear.out_b", 5, 1), h("h", opt.hidden, 1), c("c", 5, 1);
  for (Param* p : {&w, &b, &h, &c}) init_uniform(*p, rng, 1.0);
  const ParamList params{&w, &b};
  auto loss = [&] { return c.value.col(0).dot(w.value * h.value.col(0) + b.value.col(0)); };
  return grad_check(
      params,
      [&] {
        zero_grads(params);
        w.grad = c.value.col(0) * h.value.col(0).transpose();
        b.grad = c.value;
        if (opt.corrupt) corrupt_first(params);
        return loss();
      },
      loss);
}

}  // namespace treedit

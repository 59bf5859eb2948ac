#pragma once

#include <cstdint>
#include <vector>

#include "treedit/grammar.hpp"
#include "treedit/neural.hpp"

namespace treedit {

struct GradCheckOptions {
  std::uint64_t seed = 1;
  int embed = 3;
  int hidden = 4;
  double init_scale = 0.5;
  // Adds 1.0 to one analytic gradient entry of every model so the check
  // must fail.
  bool corrupt = false;
};

// Finite-difference checks of both models on a small MiniJ edit pair
// (`return super . equals ( object ) ;` -> `return object == this ;`, with
// `object` out of vocabulary so the <unknown> label is exercised). Slice
// names carry a "tree." or "token." prefix.
std::vector<GradCheckResult> gradcheck_tree(const Grammar& g, const GradCheckOptions& opt);
std::vector<GradCheckResult> gradcheck_token(const Grammar& g, const GradCheckOptions& opt);

// A loss that is linear in the output projection (fixed hidden state);
// its finite differences are exact up to rounding.
std::vector<GradCheckResult> gradcheck_linear(const GradCheckOptions& opt);

}  // namespace treedit

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treedit/editmine.hpp"
#include "treedit/grammar.hpp"

namespace treedit {

// Template-driven generator of before/after method bodies for the MiniJ
// grammar. Every record yields exactly one extracted edit pair, and no two
// records yield the same pair.
struct SynthConfig {
  size_t records = 250;
  std::uint64_t seed = 7;
  // Chance that an identifier slot gets a fresh one-off name instead of one
  // from the shared pools.
  double rare_rate = 0.3;
  // When set, every record carries exactly one fresh identifier, and it
  // appears in the target.
  bool one_rare = false;
  // Chance of an unrelated statement before the edited one.
  double prefix_rate = 0.3;
  int projects = 1;
  std::int64_t first_timestamp = 1000;
};

const std::vector<std::string>& synth_template_names();

// Round-robins over the templates. Throws std::runtime_error if the
// generator cannot find enough distinct records.
std::vector<PatchRecord> synth_corpus(const Grammar& g, const SynthConfig& cfg);

}  // namespace treedit

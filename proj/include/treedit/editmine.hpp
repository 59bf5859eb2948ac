#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "treedit/grammar.hpp"
#include "treedit/syntax.hpp"

namespace treedit {

struct PatchRecord {
  std::string project;
  std::int64_t timestamp = 0;
  std::string before;
  std::string after;
};

struct ExtractionConfig {
  int max_change_size = 10;
  int max_tree_size = 20;

  // Throws std::invalid_argument unless 1 <= max_change_size <= max_tree_size.
  void validate() const;
};

// Context-bounded before/after subtrees of one patch. Both trees are rooted
// at the same path of their full parse trees, so they share a root symbol.
struct EditPair {
  ParseTree t_p;
  ParseTree t_n;
  int change_size = 0;
  int tree_size = 0;
  std::string project;
  std::int64_t timestamp = 0;

  SymbolId root() const { return t_p.symbol; }
};

struct EditScript {
  std::vector<std::pair<int, int>> kept;  // (index in a, index in b)
  std::vector<int> deleted;               // indices in a
  std::vector<int> inserted;              // indices in b

  size_t size() const { return deleted.size() + inserted.size(); }
  bool empty() const { return size() == 0; }
};

// Longest-common-subsequence alignment. Among optimal alignments the one
// matching each b token to the earliest possible a token is chosen.
EditScript align_tokens(std::span<const std::string> a, std::span<const std::string> b);

class ExtractionError : public std::runtime_error {
 public:
  enum class Kind { EmptyChange, ChangeTooLarge };
  ExtractionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

TreePath lowest_common_ancestor(std::span<const TreePath> paths);

// Root of the minimal subtree covering the given token leaves (indices into
// the non-epsilon leaves). A single leaf is lifted to its parent so the
// result is always an internal node. Throws EmptyChange on an empty set.
TreePath changed_subtree(const Grammar& g, const ParseTree& t, const std::set<size_t>& changed_leaf_indices);

// Highest ancestor of `changed_root` whose subtree has at most
// max_tree_size nodes. Throws ChangeTooLarge when the changed subtree alone
// exceeds max_change_size or max_tree_size.
TreePath expand_context(const ParseTree& t, const TreePath& changed_root, const ExtractionConfig& cfg);

struct ExtractionStats {
  size_t records = 0;
  size_t parse_failures = 0;
  size_t unchanged = 0;
  size_t literal_only = 0;
  size_t change_too_large = 0;
  size_t context_too_large = 0;
  size_t emitted = 0;
};

struct ExtractionResult {
  std::vector<EditPair> pairs;
  ExtractionStats stats;
};

ExtractionResult extract_pairs(std::span<const PatchRecord> records, const Grammar& g, const ExtractionConfig& cfg);

struct DatasetSplit {
  std::vector<EditPair> train;
  std::vector<EditPair> valid;
  std::vector<EditPair> test;
  size_t duplicates_removed = 0;
};

// Per-project chronological 70/10/20 split, then global removal of repeated
// (before, after) pairs keeping the chronologically earliest copy.
DatasetSplit split_and_dedup(const Grammar& g, std::span<const EditPair> pairs);

// Text identity of a pair used for deduplication.
std::string canonical_key(const Grammar& g, const EditPair& p);

// JSON-lines I/O.
std::vector<PatchRecord> read_corpus(std::istream& in);
void write_corpus(std::ostream& out, std::span<const PatchRecord> records);
void write_pairs(std::ostream& out, const Grammar& g, std::span<const EditPair> pairs);
std::vector<EditPair> read_pairs(std::istream& in, const Grammar& g);

}  // namespace treedit

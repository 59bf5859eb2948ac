#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "treedit/token_model.hpp"
#include "treedit/tree_model.hpp"

namespace treedit {

// Checkpoints are JSON documents:
//   {"format": "treedit-checkpoint", "version": 1, "model": "tree"|"token",
//    "grammar_hash": "<16 hex digits>", "dims": {...},
//    "root_counts": {...} (tree) | "vocab": [[token, kind bits], ...] (token),
//    "params": {name: {"rows": r, "cols": c, "data": [column-major values]}}}
// Doubles are written in shortest round-trip form, so save/load is exact.

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_tree_model(std::ostream& out, const TreeModel& m);
void save_token_model(std::ostream& out, const TokenModel& m);
TreeModel load_tree_model(std::istream& in);
TokenModel load_token_model(std::istream& in);

void save_tree_model(const std::filesystem::path& path, const TreeModel& m);
void save_token_model(const std::filesystem::path& path, const TokenModel& m);
TreeModel load_tree_model(const std::filesystem::path& path);
TokenModel load_token_model(const std::filesystem::path& path);

// "tree" or "token"; throws CheckpointError on anything else.
std::string checkpoint_kind(const std::filesystem::path& path);

}  // namespace treedit

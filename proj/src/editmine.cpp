#include "treedit/editmine.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

namespace treedit {

using json = nlohmann::json;

void ExtractionConfig::validate() const {
  if (max_change_size < 1 || max_change_size > max_tree_size)
    throw std::invalid_argument("extraction config requires 1 <= max_change_size <= max_tree_size");
}

EditScript align_tokens(std::span<const std::string> a, std::span<const std::string> b) {
  const size_t n = a.size(), m = b.size();
  // suffix[i][j] = LCS length of a[i:] and b[j:]
  std::vector<std::vector<int>> suffix(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = n; i-- > 0;)
    for (size_t j = m; j-- > 0;)
      suffix[i][j] = a[i] == b[j] ? suffix[i + 1][j + 1] + 1 : std::max(suffix[i + 1][j], suffix[i][j + 1]);

  EditScript script;
  size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[i] == b[j] && suffix[i][j] == suffix[i + 1][j + 1] + 1) {
      script.kept.emplace_back(static_cast<int>(i), static_cast<int>(j));
      ++i;
      ++j;
    } else if (suffix[i + 1][j] >= suffix[i][j + 1]) {
      script.deleted.push_back(static_cast<int>(i++));
    } else {
      script.inserted.push_back(static_cast<int>(j++));
    }
  }
  for (; i < n; ++i) script.deleted.push_back(static_cast<int>(i));
  for (; j < m; ++j) script.inserted.push_back(static_cast<int>(j));
  return script;
}

TreePath lowest_common_ancestor(std::span<const TreePath> paths) {
  if (paths.empty()) return {};
  TreePath lca = paths.front();
  for (const auto& p : paths.subspan(1)) {
    size_t k = 0;
    while (k < lca.size() && k < p.size() && lca[k] == p[k]) ++k;
    lca.resize(k);
  }
  return lca;
}

TreePath changed_subtree(const Grammar& g, const ParseTree& t, const std::set<size_t>& changed_leaf_indices) {
  if (changed_leaf_indices.empty()) throw ExtractionError(ExtractionError::Kind::EmptyChange, "no changed leaves");
  auto leaves = token_leaf_paths(g, t);
  std::vector<TreePath> chosen;
  for (size_t i : changed_leaf_indices) {
    if (i >= leaves.size()) throw std::out_of_range("changed leaf index " + std::to_string(i) + " out of range");
    chosen.push_back(leaves[i]);
  }
  TreePath lca = lowest_common_ancestor(chosen);
  if (node_at(t, lca).is_leaf() && !lca.empty()) lca.pop_back();
  return lca;
}

TreePath expand_context(const ParseTree& t, const TreePath& changed_root, const ExtractionConfig& cfg) {
  const size_t change = node_count(node_at(t, changed_root));
  if (change > static_cast<size_t>(cfg.max_change_size) || change > static_cast<size_t>(cfg.max_tree_size))
    throw ExtractionError(ExtractionError::Kind::ChangeTooLarge,
                          "changed subtree has " + std::to_string(change) + " nodes");
  TreePath ctx = changed_root;
  while (!ctx.empty()) {
    TreePath up(ctx.begin(), ctx.end() - 1);
    if (node_count(node_at(t, up)) > static_cast<size_t>(cfg.max_tree_size)) break;
    ctx = std::move(up);
  }
  return ctx;
}

namespace {

// Leaves that mark where an edit happened in one version: the edited tokens
// themselves, or for a pure insertion/deletion the surviving neighbours.
std::set<size_t> edit_sites(const std::vector<int>& edited, const std::vector<std::pair<int, int>>& kept,
                            const std::vector<int>& other_side_edits, bool first_side, size_t length) {
  std::set<size_t> out(edited.begin(), edited.end());
  if (!out.empty()) return out;
  for (int e : other_side_edits) {
    // Neighbours of the edit point, expressed in this side's indices.
    std::optional<int> left, right;
    for (const auto& [ka, kb] : kept) {
      int other = first_side ? kb : ka;
      int mine = first_side ? ka : kb;
      if (other < e) left = mine;
      if (other > e && !right) right = mine;
    }
    if (left) out.insert(static_cast<size_t>(*left));
    if (right) out.insert(static_cast<size_t>(*right));
  }
  if (out.empty() && length > 0) out.insert(0);
  return out;
}

bool is_literal_type(const Grammar& g, SymbolId type) {
  auto k = g.symbol(type).kind;
  return k == TerminalKind::IntLit || k == TerminalKind::BoolLit;
}

}  // namespace

ExtractionResult extract_pairs(std::span<const PatchRecord> records, const Grammar& g, const ExtractionConfig& cfg) {
  cfg.validate();
  ExtractionResult res;
  for (const auto& rec : records) {
    ++res.stats.records;
    ParseTree before, after;
    try {
      before = parse_source(g, rec.before);
      after = parse_source(g, rec.after);
    } catch (const LexError&) {
      ++res.stats.parse_failures;
      continue;
    } catch (const ParseError&) {
      ++res.stats.parse_failures;
      continue;
    }
    auto tok_a = tree_to_tokens(g, before);
    auto tok_b = tree_to_tokens(g, after);
    std::vector<std::string> str_a, str_b;
    for (const auto& t : tok_a) str_a.push_back(t.token);
    for (const auto& t : tok_b) str_b.push_back(t.token);
    if (str_a == str_b) {
      ++res.stats.unchanged;
      continue;
    }

    auto script = align_tokens(str_a, str_b);
    bool literal_only = true;
    for (int i : script.deleted) literal_only = literal_only && is_literal_type(g, tok_a[static_cast<size_t>(i)].type);
    for (int j : script.inserted) literal_only = literal_only && is_literal_type(g, tok_b[static_cast<size_t>(j)].type);
    if (literal_only) {
      ++res.stats.literal_only;
      continue;
    }

    auto sites_p = edit_sites(script.deleted, script.kept, script.inserted, true, str_a.size());
    auto sites_n = edit_sites(script.inserted, script.kept, script.deleted, false, str_b.size());
    TreePath lca_p = sites_p.empty() ? TreePath{} : changed_subtree(g, before, sites_p);
    TreePath lca_n = sites_n.empty() ? TreePath{} : changed_subtree(g, after, sites_n);

    const size_t change_size = node_count(node_at(before, lca_p));
    if (change_size > static_cast<size_t>(cfg.max_change_size)) {
      ++res.stats.change_too_large;
      continue;
    }

    // Anchor: the deepest shared path whose subtrees account for the whole
    // difference between the two versions.
    TreePath anchor;
    for (size_t k = 0; k < lca_p.size() && k < lca_n.size() && lca_p[k] == lca_n[k]; ++k) anchor.push_back(lca_p[k]);
    for (;;) {
      const Node& np = node_at(before, anchor);
      const Node& nn = node_at(after, anchor);
      if (np.symbol == nn.symbol) {
        ParseTree patched = before;
        node_at(patched, anchor) = nn;
        if (patched == after) break;
      }
      if (anchor.empty()) break;
      anchor.pop_back();
    }

    if (node_count(node_at(before, anchor)) > static_cast<size_t>(cfg.max_tree_size)) {
      ++res.stats.context_too_large;
      continue;
    }
    TreePath ctx = expand_context(before, lca_p, cfg);
    // lca_p lies under anchor, so the context either contains the anchor or
    // sits below it; in the latter case widen to the anchor.
    if (ctx.size() > anchor.size()) ctx = anchor;

    EditPair pair;
    pair.t_p = node_at(before, ctx);
    pair.t_n = node_at(after, ctx);
    pair.change_size = static_cast<int>(change_size);
    pair.tree_size = static_cast<int>(node_count(pair.t_p));
    pair.project = rec.project;
    pair.timestamp = rec.timestamp;
    res.pairs.push_back(std::move(pair));
    ++res.stats.emitted;
  }
  return res;
}

std::string canonical_key(const Grammar& g, const EditPair& p) {
  return g.name(p.root()) + '\x1f' + render(g, p.t_p) + '\x1f' + render(g, p.t_n);
}

DatasetSplit split_and_dedup(const Grammar& g, std::span<const EditPair> pairs) {
  enum Part { kTrain, kValid, kTest };
  std::vector<Part> part(pairs.size(), kTrain);

  std::map<std::string, std::vector<size_t>> by_project;
  for (size_t i = 0; i < pairs.size(); ++i) by_project[pairs[i].project].push_back(i);
  for (auto& [project, idx] : by_project) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return pairs[a].timestamp < pairs[b].timestamp; });
    const size_t n = idx.size();
    const size_t n_train = (7 * n + 5) / 10;
    const size_t n_train_valid = (8 * n + 5) / 10;
    for (size_t r = 0; r < n; ++r) part[idx[r]] = r < n_train ? kTrain : (r < n_train_valid ? kValid : kTest);
  }

  // Global chronological order decides which duplicate survives.
  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return pairs[a].timestamp < pairs[b].timestamp; });
  std::vector<bool> keep(pairs.size(), false);
  std::unordered_set<std::string> seen;
  DatasetSplit split;
  for (size_t i : order) {
    if (seen.insert(canonical_key(g, pairs[i])).second)
      keep[i] = true;
    else
      ++split.duplicates_removed;
  }

  // Emit each split in chronological order.
  for (size_t i : order) {
    if (!keep[i]) continue;
    switch (part[i]) {
      case kTrain: split.train.push_back(pairs[i]); break;
      case kValid: split.valid.push_back(pairs[i]); break;
      case kTest: split.test.push_back(pairs[i]); break;
    }
  }
  return split;
}

std::vector<PatchRecord> read_corpus(std::istream& in) {
  std::vector<PatchRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      PatchRecord r;
      r.project = j.at("project").get<std::string>();
      r.timestamp = j.at("timestamp").get<std::int64_t>();
      r.before = j.at("before").get<std::string>();
      r.after = j.at("after").get<std::string>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_corpus(std::ostream& out, std::span<const PatchRecord> records) {
  for (const auto& r : records) {
    json j = {{"project", r.project}, {"timestamp", r.timestamp}, {"before", r.before}, {"after", r.after}};
    out << j.dump() << '\n';
  }
}

namespace {
json tokens_json(const Grammar& g, const ParseTree& t) {
  json arr = json::array();
  for (const auto& a : tree_to_tokens(g, t)) arr.push_back(json::array({a.token, g.name(a.type)}));
  return arr;
}

ParseTree tree_from_json(const Grammar& g, const json& rules, const json& tokens, SymbolId root) {
  auto rs = rules.get<std::vector<ProductionId>>();
  ParseTree t = rules_to_tree(g, rs, root);
  auto types = terminal_types(g, t);
  if (types.size() != tokens.size()) throw std::runtime_error("token count does not match rule skeleton");
  std::vector<std::string> toks;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i].at(0).get_ref<const std::string&>();
    const auto& type = tokens[i].at(1).get_ref<const std::string&>();
    if (g.name(types[i]) != type) throw std::runtime_error("token type " + type + " does not match skeleton");
    toks.push_back(tok);
  }
  fill_tokens(g, t, toks);
  return t;
}
}  // namespace

void write_pairs(std::ostream& out, const Grammar& g, std::span<const EditPair> pairs) {
  for (const auto& p : pairs) {
    json j;
    j["project"] = p.project;
    j["timestamp"] = p.timestamp;
    j["root"] = g.name(p.root());
    j["before"] = render(g, p.t_p);
    j["after"] = render(g, p.t_n);
    j["src_rules"] = tree_to_rules(p.t_p);
    j["tgt_rules"] = tree_to_rules(p.t_n);
    j["src_tokens"] = tokens_json(g, p.t_p);
    j["tgt_tokens"] = tokens_json(g, p.t_n);
    j["change_size"] = p.change_size;
    j["tree_size"] = p.tree_size;
    out << j.dump() << '\n';
  }
}

std::vector<EditPair> read_pairs(std::istream& in, const Grammar& g) {
  std::vector<EditPair> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      EditPair p;
      SymbolId root = g.id_of(j.at("root").get<std::string>());
      p.t_p = tree_from_json(g, j.at("src_rules"), j.at("src_tokens"), root);
      p.t_n = tree_from_json(g, j.at("tgt_rules"), j.at("tgt_tokens"), root);
      p.project = j.at("project").get<std::string>();
      p.timestamp = j.at("timestamp").get<std::int64_t>();
      p.change_size = j.at("change_size").get<int>();
      p.tree_size = j.at("tree_size").get<int>();
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace treedit

// treedit command-line driver: synth, extract, train, suggest, eval, gradcheck.
//
// Exit codes: 0 success, 1 runtime failure, 2 unparsable suggest input,
// 64 usage error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "treedit/checkpoint.hpp"
#include "treedit/editmine.hpp"
#include "treedit/gradcheck.hpp"
#include "treedit/suggest.hpp"
#include "treedit/synth.hpp"
#include "treedit/train_eval.hpp"

namespace fs = std::filesystem;
using namespace treedit;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUnparsable = 2;
constexpr int kExitUsage = 64;

std::ifstream open_read(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return in;
}

std::ofstream open_write(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::vector<EditPair> load_pairs(const fs::path& p, const Grammar& g) {
  auto in = open_read(p);
  return read_pairs(in, g);
}

DatasetSplit load_split(const fs::path& dir, const Grammar& g) {
  DatasetSplit s;
  s.train = load_pairs(dir / "train.jsonl", g);
  if (fs::exists(dir / "valid.jsonl")) s.valid = load_pairs(dir / "valid.jsonl", g);
  if (fs::exists(dir / "test.jsonl")) s.test = load_pairs(dir / "test.jsonl", g);
  return s;
}

struct Options {
  std::string grammar = TREEDIT_DEFAULT_GRAMMAR;
  bool quiet = false;

  // synth
  std::string synth_out;
  SynthConfig synth;

  // extract
  std::string corpus;
  std::string data_dir;
  ExtractionConfig extraction;

  // train
  std::string model = "tree";
  std::string out;
  std::string log_csv;
  std::string resume_from;
  std::string tree_ckpt;
  std::string token_ckpt;
  TrainConfig train;

  // suggest / eval
  std::string input = "-";
  std::string root;
  SuggestConfig decode;
  std::string test_file;
  std::vector<int> ks{1, 2, 5, 10};
  std::string json_out;

  // gradcheck
  GradCheckOptions gradcheck;
  double tolerance = 1e-4;
};

int run_synth(const Options& o, const Grammar& g) {
  const auto records = synth_corpus(g, o.synth);
  if (o.synth_out.empty() || o.synth_out == "-") {
    write_corpus(std::cout, records);
  } else {
    auto out = open_write(o.synth_out);
    write_corpus(out, records);
  }
  return 0;
}

int run_extract(const Options& o, const Grammar& g) {
  o.extraction.validate();
  auto in = open_read(o.corpus);
  const auto records = read_corpus(in);
  const auto res = extract_pairs(records, g, o.extraction);
  const auto split = split_and_dedup(g, res.pairs);
  fs::create_directories(o.data_dir);
  const std::pair<const char*, const std::vector<EditPair>*> files[] = {
      {"train.jsonl", &split.train}, {"valid.jsonl", &split.valid}, {"test.jsonl", &split.test}};
  for (const auto& [name, pairs] : files) {
    auto out = open_write(fs::path(o.data_dir) / name);
    write_pairs(out, g, *pairs);
  }
  const auto& s = res.stats;
  std::cerr << "records " << s.records << "\nparse_failures " << s.parse_failures << "\nunchanged " << s.unchanged
            << "\nliteral_only " << s.literal_only << "\nchange_too_large " << s.change_too_large
            << "\ncontext_too_large " << s.context_too_large << "\nemitted " << s.emitted << "\nduplicates_removed "
            << split.duplicates_removed << "\ntrain " << split.train.size() << "\nvalid " << split.valid.size()
            << "\ntest " << split.test.size() << "\n";
  return 0;
}

int run_train(const Options& o, const Grammar& g) {
  const DatasetSplit split = load_split(o.data_dir, g);
  TrainLog log;
  std::ostream* progress = o.quiet ? nullptr : &std::cerr;
  if (o.model == "tree") {
    std::optional<TreeModel> resume;
    if (!o.resume_from.empty()) resume = load_tree_model(o.resume_from);
    TreeModel m = train_tree(g, split, o.train, &log, resume ? &*resume : nullptr, progress);
    save_tree_model(fs::path(o.out), m);
  } else {
    std::optional<TokenModel> resume;
    std::optional<TreeModel> tree;
    if (!o.resume_from.empty()) resume = load_token_model(o.resume_from);
    if (!o.tree_ckpt.empty()) tree = load_tree_model(o.tree_ckpt);
    TokenModel m =
        train_token(g, split, o.train, &log, resume ? &*resume : nullptr, tree ? &*tree : nullptr, progress);
    save_token_model(fs::path(o.out), m);
    if (log.skipped) std::cerr << "skipped " << log.skipped << " unconcretizable training pairs\n";
  }
  if (!o.log_csv.empty()) {
    auto out = open_write(o.log_csv);
    log.write_csv(out);
  }
  std::cerr << "best epoch " << log.best_epoch << " valid " << log.best_metric << "\n";
  return 0;
}

std::string read_input(const std::string& path) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
  auto in = open_read(path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int run_suggest(const Options& o, const Grammar& g) {
  const TreeModel tree = load_tree_model(o.tree_ckpt);
  const TokenModel token = load_token_model(o.token_ckpt);
  check_grammar(g, tree, token);
  const std::string source = read_input(o.input);
  std::optional<SymbolId> root;
  if (!o.root.empty()) root = g.id_of(o.root);
  SuggestResult res;
  try {
    res = suggest(tree, token, g, source, o.decode, root);
  } catch (const LexError& e) {
    std::cerr << "error: input does not lex: " << e.what() << "\n";
    return kExitUnparsable;
  } catch (const ParseError& e) {
    std::cerr << "error: input does not parse: " << e.what() << "\n";
    return kExitUnparsable;
  }
  for (size_t i = 0; i < res.suggestions.size(); ++i) {
    const auto& s = res.suggestions[i];
    std::cout << (i + 1) << '\t' << s.joint << '\t' << s.code << '\n';
  }
  return 0;
}

int run_eval(const Options& o, const Grammar& g) {
  const TreeModel tree = load_tree_model(o.tree_ckpt);
  const TokenModel token = load_token_model(o.token_ckpt);
  const auto pairs = load_pairs(o.test_file, g);
  const EvalReport r = evaluate(g, tree, token, pairs, o.ks, o.decode);
  if (!o.json_out.empty()) {
    auto out = open_write(o.json_out);
    out << r.to_json();
  }
  std::cout << r.to_table();
  return 0;
}

int run_gradcheck(const Options& o, const Grammar& g) {
  std::vector<GradCheckResult> results = gradcheck_tree(g, o.gradcheck);
  for (auto& r : gradcheck_token(g, o.gradcheck)) results.push_back(std::move(r));
  bool ok = true;
  for (const auto& r : results) {
    const bool pass = r.max_rel_error <= o.tolerance;
    ok = ok && pass;
    std::cout << (pass ? "ok  " : "FAIL") << '\t' << r.name << '\t' << r.max_rel_error << '\t' << r.checked << '\n';
  }
  std::cout << (ok ? "all slices within " : "gradient check failed at tolerance ") << o.tolerance << '\n';
  return ok ? 0 : kExitFailure;
}

// CLI::PositiveNumber reports its bounds as raw doubles, which reads badly.
CLI::Validator at_least(double lo) {
  return CLI::Validator(
      [lo](std::string& text) -> std::string {
        double v = 0;
        if (!CLI::detail::lexical_cast(text, v)) return "not a number: " + text;
        return v >= lo ? "" : "must be at least " + CLI::detail::to_string(lo) + ", got " + text;
      },
      ">=" + CLI::detail::to_string(lo));
}

CLI::Validator above_zero() {
  return CLI::Validator(
      [](std::string& text) -> std::string {
        double v = 0;
        if (!CLI::detail::lexical_cast(text, v)) return "not a number: " + text;
        return v > 0 ? "" : "must be greater than 0, got " + text;
      },
      ">0");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grammar-constrained code edit suggestions"};
  app.require_subcommand(1);
  Options o;
  const char* env_config = std::getenv("TREEDIT_CONFIG");
  app.set_config("--config", env_config ? env_config : "", "TOML/INI file with default option values");
  app.add_option("--grammar", o.grammar, "Grammar file")->check(CLI::ExistingFile)->capture_default_str();
  app.add_flag("-q,--quiet", o.quiet, "Suppress progress output");

  auto* synth = app.add_subcommand("synth", "Write a synthetic patch corpus (JSON lines)");
  synth->add_option("-o,--out", o.synth_out, "Output file ('-' for stdout)");
  synth->add_option("--records", o.synth.records, "Number of records")->check(at_least(1));
  synth->add_option("--seed", o.synth.seed, "Random seed");
  synth->add_option("--rare-rate", o.synth.rare_rate, "Share of one-off identifiers")->check(CLI::Range(0.0, 1.0));
  synth->add_flag("--one-rare", o.synth.one_rare, "Exactly one one-off identifier per record, used in the target");
  synth->add_option("--projects", o.synth.projects, "Number of projects")->check(at_least(1));

  auto* extract = app.add_subcommand("extract", "Mine edit pairs and split them into train/valid/test");
  extract->add_option("corpus", o.corpus, "Patch corpus (JSON lines)")->required()->check(CLI::ExistingFile);
  extract->add_option("-o,--out", o.data_dir, "Output directory")->required();
  extract->add_option("--max-change-size", o.extraction.max_change_size)->check(at_least(1));
  extract->add_option("--max-tree-size", o.extraction.max_tree_size)->check(at_least(1));

  auto* train = app.add_subcommand("train", "Train the tree or token model");
  train->add_option("--model", o.model, "tree or token")->check(CLI::IsMember({"tree", "token"}))->required();
  train->add_option("--data", o.data_dir, "Directory with train/valid/test.jsonl")
      ->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("-o,--out", o.out, "Checkpoint to write")->required();
  train->add_option("--log", o.log_csv, "Training log (CSV)");
  train->add_option("--resume-from", o.resume_from, "Continue from a checkpoint")->check(CLI::ExistingFile);
  train->add_option("--tree", o.tree_ckpt, "Tree checkpoint for full-pipeline token validation")
      ->check(CLI::ExistingFile);
  train->add_option("--epochs", o.train.n_epoch, "Maximum epochs")->check(at_least(1))->capture_default_str();
  train->add_option("--patience", o.train.valid_patience, "Epochs without validation gain before stopping")->check(at_least(1))->capture_default_str();
  train->add_option("--lr", o.train.lr, "Initial SGD learning rate")->check(above_zero())->capture_default_str();
  train->add_option("--lr-decay", o.train.lr_decay, "Learning-rate factor after an epoch without gain")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  train->add_option("--seed", o.train.seed, "Initialisation and shuffling seed")->capture_default_str();
  train->add_option("--min-freq", o.train.min_freq, "Minimum pair count for a vocabulary identifier")->check(at_least(1))->capture_default_str();
  train->add_option("--embed", o.train.dims.embed, "Embedding size")->check(at_least(1))->capture_default_str();
  train->add_option("--hidden", o.train.dims.hidden, "LSTM state size")->check(at_least(1))->capture_default_str();

  auto add_decode = [&](CLI::App* cmd) {
    cmd->add_option("--tree", o.tree_ckpt, "Tree checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--token", o.token_ckpt, "Token checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--k-tree", o.decode.k_tree, "Skeletons kept by the rule beam")->check(at_least(1))->capture_default_str();
    cmd->add_option("--k-token", o.decode.k_token, "Fillings kept per skeleton")->check(at_least(1))->capture_default_str();
    cmd->add_option("--max-steps", o.decode.max_steps, "Rule-decoding step limit")->check(at_least(1))->capture_default_str();
  };

  auto* sug = app.add_subcommand("suggest", "Suggest edits for a code fragment");
  add_decode(sug);
  sug->add_option("-i,--input", o.input, "Input file ('-' for stdin)")->capture_default_str();
  sug->add_option("-K", o.decode.k, "Number of suggestions")->check(at_least(1))->capture_default_str();
  sug->add_option("--root", o.root, "Nonterminal to parse the input as");

  auto* ev = app.add_subcommand("eval", "Top-K exact-match evaluation");
  add_decode(ev);
  ev->add_option("test", o.test_file, "Edit pairs (JSON lines)")->required()->check(CLI::ExistingFile);
  ev->add_option("--ks", o.ks, "K values")->delimiter(',')->check(at_least(1))->capture_default_str();
  ev->add_option("--json", o.json_out, "Also write the report as JSON");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of both models");
  gc->add_option("--seed", o.gradcheck.seed)->capture_default_str();
  gc->add_option("--tolerance", o.tolerance)->capture_default_str();
  gc->add_flag("--corrupt-gradient", o.gradcheck.corrupt, "Perturb the analytic gradient (must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const Grammar g = load_grammar(o.grammar);
    if (synth->parsed()) return run_synth(o, g);
    if (extract->parsed()) return run_extract(o, g);
    if (train->parsed()) return run_train(o, g);
    if (sug->parsed()) return run_suggest(o, g);
    if (ev->parsed()) return run_eval(o, g);
    if (gc->parsed()) return run_gradcheck(o, g);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

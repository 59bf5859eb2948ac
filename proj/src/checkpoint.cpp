#include "treedit/checkpoint.hpp"

#include <fstream>
#include <json.hpp>

namespace treedit {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "treedit-checkpoint";
constexpr int kVersion = 1;

json dims_json(const ModelDims& d) { return {{"embed", d.embed}, {"hidden", d.hidden}, {"init_scale", d.init_scale}}; }

ModelDims dims_from(const json& j) {
  ModelDims d;
  d.embed = j.at("embed").get<int>();
  d.hidden = j.at("hidden").get<int>();
  d.init_scale = j.at("init_scale").get<double>();
  return d;
}

json params_json(const ParamList& params) {
  json out = json::object();
  for (const Param* p : params) {
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    out[p->name] = {{"rows", p->value.rows()}, {"cols", p->value.cols()}, {"data", std::move(data)}};
  }
  return out;
}

void load_params(const json& j, const ParamList& params) {
  if (j.size() != params.size())
    throw CheckpointError("checkpoint has " + std::to_string(j.size()) + " arrays, model expects " +
                          std::to_string(params.size()));
  for (Param* p : params) {
    if (!j.contains(p->name)) throw CheckpointError("checkpoint is missing array " + p->name);
    const json& a = j.at(p->name);
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    if (rows != p->value.rows() || cols != p->value.cols())
      throw CheckpointError("array " + p->name + " has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                            ", expected " + std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    const auto data = a.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw CheckpointError("array " + p->name + " has the wrong number of values");
    std::copy(data.begin(), data.end(), p->value.data());
  }
}

json header(const char* kind, std::uint64_t hash, const ModelDims& dims) {
  return {{"format", kFormat},
          {"version", kVersion},
          {"model", kind},
          {"grammar_hash", hash_hex(hash)},
          {"dims", dims_json(dims)}};
}

json read_document(std::istream& in, const char* kind) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kFormat) throw CheckpointError("not a treedit checkpoint");
  if (j.value("version", 0) != kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  if (j.value("model", "") != kind)
    throw CheckpointError("expected a " + std::string(kind) + " checkpoint, found " + j.value("model", "?"));
  return j;
}

std::uint64_t hash_from(const json& j) { return std::stoull(j.at("grammar_hash").get<std::string>(), nullptr, 16); }

void write(std::ostream& out, const json& j) {
  out << j.dump() << '\n';
  if (!out) throw CheckpointError("failed to write checkpoint");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  return out;
}

}  // namespace

void save_tree_model(std::ostream& out, const TreeModel& m) {
  json j = header("tree", m.grammar_hash, m.dims);
  j["num_rules"] = m.params.num_rules;
  j["root_counts"] = m.root_counts;
  j["params"] = params_json(const_cast<TreeModelParams&>(m.params).params());
  write(out, j);
}

void save_token_model(std::ostream& out, const TokenModel& m) {
  json j = header("token", m.grammar_hash, m.dims);
  j["num_types"] = m.params.num_types;
  json vocab = json::array();
  for (int id = 1; id < m.vocab.size(); ++id) vocab.push_back({m.vocab.token(id), m.vocab.kind_bits(id)});
  j["vocab"] = std::move(vocab);
  j["params"] = params_json(const_cast<TokenModelParams&>(m.params).params());
  write(out, j);
}

TreeModel load_tree_model(std::istream& in) {
  const json j = read_document(in, "tree");
  TreeModel m;
  m.dims = dims_from(j.at("dims"));
  m.grammar_hash = hash_from(j);
  m.root_counts = j.at("root_counts").get<std::map<std::string, int>>();
  m.params = TreeModelParams(j.at("num_rules").get<int>(), m.dims.embed, m.dims.hidden);
  load_params(j.at("params"), m.params.params());
  return m;
}

TokenModel load_token_model(std::istream& in) {
  const json j = read_document(in, "token");
  TokenModel m;
  m.dims = dims_from(j.at("dims"));
  m.grammar_hash = hash_from(j);
  for (const auto& entry : j.at("vocab")) {
    const auto token = entry.at(0).get<std::string>();
    const auto bits = entry.at(1).get<unsigned>();
    int id = -1;
    for (unsigned k = 0; k < 8; ++k)
      if (bits & (1u << k)) id = m.vocab.add(token, static_cast<TerminalKind>(k));
    if (id != m.vocab.size() - 1) throw CheckpointError("vocabulary entry '" + token + "' is duplicated or has no kind");
  }
  m.params = TokenModelParams(m.vocab.size(), j.at("num_types").get<int>(), m.dims.embed, m.dims.hidden);
  load_params(j.at("params"), m.params.params());
  return m;
}

void save_tree_model(const std::filesystem::path& path, const TreeModel& m) {
  auto out = open_out(path);
  save_tree_model(out, m);
}

void save_token_model(const std::filesystem::path& path, const TokenModel& m) {
  auto out = open_out(path);
  save_token_model(out, m);
}

TreeModel load_tree_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return load_tree_model(in);
}

TokenModel load_token_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return load_token_model(in);
}

std::string checkpoint_kind(const std::filesystem::path& path) {
  auto in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  const std::string kind = j.is_object() ? j.value("model", "") : "";
  if (kind != "tree" && kind != "token") throw CheckpointError("not a treedit checkpoint: " + path.string());
  return kind;
}

}  // namespace treedit

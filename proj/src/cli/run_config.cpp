#include "gcpn/cli/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "gcpn/chiral/chiral.hpp"
#include "gcpn/errors.hpp"
#include "gcpn/nbody/nbody.hpp"

namespace gcpn::cli {

std::string to_string(Task task) { return task == Task::kNms ? "nms" : "chiral"; }

Task parse_task(const std::string& text) {
  if (text == "nms") return Task::kNms;
  if (text == "chiral") return Task::kChiral;
  throw ConfigError("unknown task '" + text + "' (expected nms or chiral)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_f64(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

#define SIZE_FIELD(name)                                                                       \
  {#name,                                                                                      \
   {[](RunConfig& c, const std::string& v) { c.name = static_cast<std::size_t>(parse_u64(#name, v)); }, \
    [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.name); }}}
#define F64_FIELD(name)                                                                 \
  {#name,                                                                               \
   {[](RunConfig& c, const std::string& v) { c.name = parse_f64(#name, v); },           \
    [](const RunConfig& c) -> std::optional<std::string> { return fmt(c.name); }}}
#define BOOL_FIELD(name)                                                                \
  {#name,                                                                               \
   {[](RunConfig& c, const std::string& v) { c.name = parse_bool(#name, v); },          \
    [](const RunConfig& c) -> std::optional<std::string> { return c.name ? "true" : "false"; }}}
#define STR_FIELD(name)                                                                 \
  {#name,                                                                               \
   {[](RunConfig& c, const std::string& v) { c.name = v; },                             \
    [](const RunConfig& c) -> std::optional<std::string> { return c.name; }}}

// Serialisation order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"task",
       {[](RunConfig& c, const std::string& v) { c.task = parse_task(v); },
        [](const RunConfig& c) -> std::optional<std::string> { return to_string(c.task); }}},
      SIZE_FIELD(layers),
      SIZE_FIELD(node_scalars),
      SIZE_FIELD(node_vectors),
      SIZE_FIELD(edge_scalars),
      SIZE_FIELD(edge_vectors),
      SIZE_FIELD(lambda),
      SIZE_FIELD(omega),
      SIZE_FIELD(ffn_depth),
      {"aggregation",
       {[](RunConfig& c, const std::string& v) {
          if (v == "mean") c.aggregation = gcpconv::Aggregation::kMean;
          else if (v == "sum") c.aggregation = gcpconv::Aggregation::kSum;
          else throw ConfigError("aggregation: expected mean or sum, got '" + v + "'");
        },
        [](const RunConfig& c) -> std::optional<std::string> {
          return c.aggregation == gcpconv::Aggregation::kMean ? "mean" : "sum";
        }}},
      F64_FIELD(dropout),
      F64_FIELD(dense_dropout),
      {"update_positions",
       {[](RunConfig& c, const std::string& v) { c.update_positions = parse_bool("update_positions", v); },
        [](const RunConfig& c) -> std::optional<std::string> {
          if (!c.update_positions) return std::nullopt;
          return *c.update_positions ? "true" : "false";
        }}},
      BOOL_FIELD(ablate_frames),
      BOOL_FIELD(ablate_resgcp),
      BOOL_FIELD(ablate_scalars),
      BOOL_FIELD(ablate_vectors),
      F64_FIELD(lr),
      F64_FIELD(beta1),
      F64_FIELD(beta2),
      F64_FIELD(adam_eps),
      SIZE_FIELD(epochs),
      SIZE_FIELD(min_epochs),
      SIZE_FIELD(batch_size),
      {"seed",
       {[](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
        [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.seed); }}},
      STR_FIELD(train_data),
      STR_FIELD(val_data),
      STR_FIELD(test_data),
      SIZE_FIELD(horizon),
      STR_FIELD(out_dir),
  };
  return table;
}

#undef SIZE_FIELD
#undef F64_FIELD
#undef BOOL_FIELD
#undef STR_FIELD

}  // namespace

bool RunConfig::resolved_update_positions() const {
  return update_positions.value_or(task == Task::kNms);
}

gcpnet::ModelConfig RunConfig::model_config() const {
  gcpnet::ModelConfig m;
  m.layers = layers;
  m.node_scalars = node_scalars;
  m.node_vectors = node_vectors;
  m.edge_scalars = edge_scalars;
  m.edge_vectors = edge_vectors;
  m.lambda = lambda;
  m.omega = omega;
  m.ffn_depth = ffn_depth;
  m.aggregation = aggregation;
  m.dropout = dropout;
  m.dense_dropout = dense_dropout;
  m.update_positions = resolved_update_positions();
  m.ablate_frames = ablate_frames;
  m.ablate_resgcp = ablate_resgcp;
  m.ablate_scalars = ablate_scalars;
  m.ablate_vectors = ablate_vectors;
  if (task == Task::kNms) {
    m.node_scalar_in = 1;
    m.node_vector_in = 3;
    m.edge_scalar_in = nbody::kRbfCount + 1;
    m.edge_vector_in = 1;
    m.head = gcpnet::Head::kNodePositions;
  } else {
    m.node_scalar_in = chiral::kPoints;
    m.node_vector_in = 2;
    m.edge_scalar_in = chiral::kChiralRbfCount;
    m.edge_vector_in = 1;
    m.head = gcpnet::Head::kGraphClass;
    m.n_classes = 2;
  }
  return m;
}

void RunConfig::validate() const {
  if (task == Task::kChiral && resolved_update_positions()) {
    throw ConfigError("chiral task: update_positions must be false (the target is a class label)");
  }
  if (task == Task::kNms && !resolved_update_positions()) {
    throw ConfigError("nms task: update_positions must be true (the target is future positions)");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("beta1, beta2 must be in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("adam_eps must be positive");
  if (min_epochs > epochs) throw ConfigError("min_epochs must not exceed epochs");
  if (out_dir.empty()) throw ConfigError("out_dir must be set");
  model_config().validate();
}

RunConfig parse_run_config(const std::string& text) {
  std::map<std::string, const Field*> by_name;
  for (const auto& [name, f] : fields()) by_name[name] = &f;
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    try {
      it->second->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [name, f] : fields()) {
    if (const auto v = f.get(cfg)) out += name + " = " + *v + "\n";
  }
  return out;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << serialize_run_config(cfg);
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* env = std::getenv("GCPN_SEED"); env && *env) {
    cfg.seed = parse_u64("GCPN_SEED", env);
  }
}

}  // namespace gcpn::cli

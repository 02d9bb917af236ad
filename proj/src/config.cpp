#include "polyse/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "polyse/error.hpp"

namespace polyse {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <std::size_t N>
std::array<std::string, N> parse_columns(const std::string& key, const std::string& v) {
  std::array<std::string, N> out;
  std::size_t i = 0;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (i == N) break;
    out[i++] = trim(item);
  }
  if (i != N || std::getline(ss, item, ',')) {
    throw ConfigError(key + ": expected " + std::to_string(N) + " comma-separated column names");
  }
  for (const auto& c : out) {
    if (c.empty()) throw ConfigError(key + ": empty column name");
  }
  return out;
}

template <std::size_t N>
std::string join_columns(const std::array<std::string, N>& cols) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) out += (i ? "," : "") + cols[i];
  return out;
}

struct Key {
  const char* name;
  const char* type;
  const char* description;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Key>& keys() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::vector<Key> table = {
      {"data.ppi", "path", "protein-protein interaction table",
       [](const C& c) { return c.data.ppi.string(); }, [](C& c, S v) { c.data.ppi = v; }},
      {"data.targets", "path", "drug-protein target table",
       [](const C& c) { return c.data.targets.string(); },
       [](C& c, S v) { c.data.targets = v; }},
      {"data.combo", "path", "drug-drug side effect table",
       [](const C& c) { return c.data.combo.string(); }, [](C& c, S v) { c.data.combo = v; }},
      {"data.mono", "path", "single-drug side effect table",
       [](const C& c) { return c.data.mono.string(); }, [](C& c, S v) { c.data.mono = v; }},
      {"schema.delimiter", "char", "field delimiter; 'tab' for tab",
       [](const C& c) { return c.schema.delimiter == '\t' ? std::string("tab")
                                                            : std::string(1, c.schema.delimiter); },
       [](C& c, S v) {
         if (v == "tab" || v == "\\t") {
           c.schema.delimiter = '\t';
         } else if (v.size() == 1) {
           c.schema.delimiter = v[0];
         } else {
           throw ConfigError("schema.delimiter: expected one character or 'tab'");
         }
       }},
      {"schema.ppi_columns", "columns[2]", "protein 1, protein 2",
       [](const C& c) { return join_columns(c.schema.ppi_columns); },
       [](C& c, S v) { c.schema.ppi_columns = parse_columns<2>("schema.ppi_columns", v); }},
      {"schema.target_columns", "columns[2]", "drug, protein",
       [](const C& c) { return join_columns(c.schema.target_columns); },
       [](C& c, S v) { c.schema.target_columns = parse_columns<2>("schema.target_columns", v); }},
      {"schema.combo_columns", "columns[4]", "drug 1, drug 2, side-effect code, side-effect name",
       [](const C& c) { return join_columns(c.schema.combo_columns); },
       [](C& c, S v) { c.schema.combo_columns = parse_columns<4>("schema.combo_columns", v); }},
      {"schema.mono_columns", "columns[3]", "drug, side-effect code, side-effect name",
       [](const C& c) { return join_columns(c.schema.mono_columns); },
       [](C& c, S v) { c.schema.mono_columns = parse_columns<3>("schema.mono_columns", v); }},
      {"schema.skip_self_loops", "bool", "drop self-interaction rows instead of failing",
       [](const C& c) { return std::string(c.schema.skip_self_loops ? "true" : "false"); },
       [](C& c, S v) { c.schema.skip_self_loops = parse_bool("schema.skip_self_loops", v); }},
      {"split.train", "double", "training fraction per stratum",
       [](const C& c) { return format_double(c.split.train); },
       [](C& c, S v) { c.split.train = parse_double("split.train", v); }},
      {"split.valid", "double", "validation fraction per stratum",
       [](const C& c) { return format_double(c.split.valid); },
       [](C& c, S v) { c.split.valid = parse_double("split.valid", v); }},
      {"split.test", "double", "test fraction per stratum",
       [](const C& c) { return format_double(c.split.test); },
       [](C& c, S v) { c.split.test = parse_double("split.test", v); }},
      {"seed", "uint", "seed for negatives, splits, initialization and training",
       [](const C& c) { return std::to_string(c.seed); },
       [](C& c, S v) { c.seed = parse_uint("seed", v); }},
      {"regime", "enum", "full | drug_drug_only | targeted_drugs_only",
       [](const C& c) { return std::string(to_string(c.regime)); },
       [](C& c, S v) { c.regime = parse_regime(v); }},
      {"features.min_support", "uint", "minimum number of supporting pairs per template",
       [](const C& c) { return std::to_string(c.min_support); },
       [](C& c, S v) { c.min_support = parse_uint("features.min_support", v); }},
      {"features.support_pairs", "enum", "train_positives | train_all",
       [](const C& c) { return std::string(to_string(c.support_pairs)); },
       [](C& c, S v) { c.support_pairs = parse_support_pairs(v); }},
      {"model.type", "enum", "poe | baseline",
       [](const C& c) { return std::string(c.model_type == ModelType::Poe ? "poe" : "baseline"); },
       [](C& c, S v) {
         if (v == "poe") {
           c.model_type = ModelType::Poe;
         } else if (v == "baseline") {
           c.model_type = ModelType::Baseline;
         } else {
           throw ConfigError("model.type: expected poe or baseline");
         }
       }},
      {"model.mode", "enum", "combined | embedding_only",
       [](const C& c) { return std::string(to_string(c.train.mode)); },
       [](C& c, S v) { c.train.mode = parse_score_mode(v); }},
      {"model.dim", "uint", "embedding dimension",
       [](const C& c) { return std::to_string(c.train.dim); },
       [](C& c, S v) { c.train.dim = parse_uint("model.dim", v); }},
      {"train.negatives", "uint", "corruptions per positive",
       [](const C& c) { return std::to_string(c.train.negatives_per_positive); },
       [](C& c, S v) { c.train.negatives_per_positive = parse_uint("train.negatives", v); }},
      {"train.batch_size", "uint", "positives per minibatch",
       [](const C& c) { return std::to_string(c.train.batch_size); },
       [](C& c, S v) { c.train.batch_size = parse_uint("train.batch_size", v); }},
      {"train.learning_rate", "double", "step size",
       [](const C& c) { return format_double(c.train.learning_rate); },
       [](C& c, S v) { c.train.learning_rate = parse_double("train.learning_rate", v); }},
      {"train.optimizer", "enum", "adagrad | sgd",
       [](const C& c) { return std::string(to_string(c.train.optimizer)); },
       [](C& c, S v) { c.train.optimizer = parse_optimizer(v); }},
      {"train.max_epochs", "uint", "epoch budget",
       [](const C& c) { return std::to_string(c.train.max_epochs); },
       [](C& c, S v) { c.train.max_epochs = parse_uint("train.max_epochs", v); }},
      {"train.patience", "uint", "epochs without validation AuPR gain before stopping",
       [](const C& c) { return std::to_string(c.train.patience); },
       [](C& c, S v) { c.train.patience = parse_uint("train.patience", v); }},
      {"train.l2", "double", "penalty on squared norm of touched parameters",
       [](const C& c) { return format_double(c.train.l2); },
       [](C& c, S v) { c.train.l2 = parse_double("train.l2", v); }},
      {"output.dir", "path", "root of all command outputs",
       [](const C& c) { return c.output_dir.string(); }, [](C& c, S v) { c.output_dir = v; }},
      {"explain.top_n", "uint", "feature contributions listed per explanation",
       [](const C& c) { return std::to_string(c.explain_top_n); },
       [](C& c, S v) { c.explain_top_n = parse_uint("explain.top_n", v); }},
      {"run.threads", "uint", "worker threads (1 for deterministic runs)",
       [](const C& c) { return std::to_string(c.threads); },
       [](C& c, S v) { c.threads = parse_uint("run.threads", v); }},
      {"run.deterministic", "bool", "bit-reproducible outputs; requires run.threads = 1",
       [](const C& c) { return std::string(c.deterministic ? "true" : "false"); },
       [](C& c, S v) { c.deterministic = parse_bool("run.deterministic", v); }},
  };
  return table;
}

const Key* find_key(const std::string& name) {
  static const std::map<std::string, const Key*> by_name = [] {
    std::map<std::string, const Key*> m;
    for (const Key& k : keys()) m.emplace(k.name, &k);
    return m;
  }();
  auto it = by_name.find(name);
  return it == by_name.end() ? nullptr : it->second;
}

void validate(RunConfig& cfg) {
  cfg.split.validate();
  if (cfg.min_support == 0) throw ConfigError("features.min_support must be at least 1");
  cfg.sync();
}

}  // namespace

void RunConfig::sync() {
  split.seed = seed;
  train.seed = seed;
  train.threads = threads;
  train.deterministic = deterministic;
}

std::string RunConfig::model_name() const {
  if (model_type == ModelType::Baseline) return "baseline";
  return to_string(train.mode);
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError("unknown config key '" + key + "'");
  k->set(cfg, trim(value));
  validate(cfg);
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    // Values may carry a trailing `# comment`, as printed by --print-config.
    std::string value = t.substr(eq + 1);
    if (const auto hash = value.find("  #"); hash != std::string::npos) value.resize(hash);
    value = trim(value);
    const Key* k = find_key(key);
    if (!k) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    k->set(cfg, value);
  }
  if (!base_dir.empty()) {
    for (auto* p : {&cfg.data.ppi, &cfg.data.targets, &cfg.data.combo, &cfg.data.mono,
                    &cfg.output_dir}) {
      if (!p->empty() && p->is_relative()) *p = (base_dir / *p).lexically_normal();
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  const auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(in, base);
}

std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  return out;
}

void print_config_schema(std::ostream& os) {
  const RunConfig defaults;
  for (const Key& k : keys()) {
    os << k.name << " = " << k.get(defaults) << "  # " << k.type << ": " << k.description
       << '\n';
  }
}

std::uint64_t config_hash(const RunConfig& cfg) {
  Fnv1a h;
  h.update(to_config_text(cfg));
  return h.digest();
}

}  // namespace polyse

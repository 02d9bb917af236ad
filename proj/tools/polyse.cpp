#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "polyse/config.hpp"
#include "polyse/error.hpp"
#include "polyse/pipeline.hpp"
#include "polyse/synthetic.hpp"

namespace fs = std::filesystem;
using namespace polyse;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool deterministic = false;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "config file (key = value lines)");
  cmd->add_option("--seed", f.seed, "overrides `seed`");
  cmd->add_option("--threads", f.threads, "overrides `run.threads`");
  cmd->add_flag("--deterministic", f.deterministic, "bit-reproducible run; needs --threads 1");
  cmd->add_option("--set", f.settings, "KEY=VALUE override, repeatable");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  for (const std::string& s : f.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) apply_setting(cfg, "seed", std::to_string(*f.seed));
  if (f.threads) apply_setting(cfg, "run.threads", std::to_string(*f.threads));
  if (f.deterministic) apply_setting(cfg, "run.deterministic", "true");
  return cfg;
}

// Planted-rule dataset plus a config pointing at it.
void write_synthetic(const fs::path& dir, std::uint64_t seed) {
  PlantedRuleConfig pc;
  pc.seed = seed;
  const PlantedRuleDataset ds = make_planted_rule_dataset(pc);
  fs::create_directories(dir);
  DatasetPaths paths{dir / "ppi.csv", dir / "targets.csv", dir / "combo.csv", dir / "mono.csv"};
  write_dataset_files(ds.graph, paths);
  RunConfig cfg;
  cfg.data = DatasetPaths{"ppi.csv", "targets.csv", "combo.csv", "mono.csv"};
  cfg.output_dir = "out";
  cfg.min_support = 3;
  cfg.train.dim = 16;
  cfg.train.max_epochs = 30;
  cfg.train.batch_size = 128;
  std::ofstream out(dir / "polyse.conf");
  out << "# planted-rule synthetic dataset\n" << to_config_text(cfg);
  if (!out.flush()) throw Error("cannot write " + (dir / "polyse.conf").string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polyse: polypharmacy side-effect prediction on a drug/protein knowledge graph"};
  app.require_subcommand(0, 1);
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print every config key with its default and exit");

  CommonFlags flags;
  auto* ingest = app.add_subcommand("ingest", "read the four tables, write graph statistics");
  auto* split = app.add_subcommand("split", "sample negatives and write the stratified split");
  auto* featurize = app.add_subcommand("featurize", "enumerate relational feature templates");
  auto* train = app.add_subcommand("train", "train the configured model");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  auto* explain = app.add_subcommand("explain", "rank candidates and attribute one pair");
  auto* reproduce = app.add_subcommand("reproduce", "all regimes end to end, then results.txt");
  auto* synth = app.add_subcommand("synth", "write a planted-rule synthetic dataset and config");
  for (auto* c : {ingest, split, featurize, train, eval, explain, reproduce}) add_common(c, flags);

  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "defaults to the configured model's checkpoint");

  ExplainRequest req;
  std::string explain_ckpt;
  std::string embedding_ckpt;
  std::vector<std::string> pair;
  explain->add_option("--pair", pair, "two drug ids")->expected(2)->required();
  explain->add_option("--side-effect", req.side_effect, "side-effect id")->required();
  explain->add_option("--checkpoint", explain_ckpt, "combined-mode checkpoint");
  explain->add_option("--embedding-checkpoint", embedding_ckpt,
                      "embedding-only checkpoint for the comparison ranking");

  std::string synth_dir;
  std::uint64_t synth_seed = 7;
  synth->add_option("--out", synth_dir, "output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    if (print_config) {
      print_config_schema(std::cout);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return static_cast<int>(ExitCode::Usage);
    }
    if (synth->parsed()) {
      write_synthetic(synth_dir, synth_seed);
      return 0;
    }
    Workspace ws(resolve(flags));
    ws.set_log(&std::cerr);
    if (ingest->parsed()) cmd_ingest(ws);
    if (split->parsed()) cmd_split(ws);
    if (featurize->parsed()) cmd_featurize(ws);
    if (train->parsed()) cmd_train(ws);
    if (eval->parsed()) {
      cmd_eval(ws, checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint));
    }
    if (explain->parsed()) {
      req.drug_a = pair.at(0);
      req.drug_b = pair.at(1);
      if (!explain_ckpt.empty()) req.checkpoint = explain_ckpt;
      if (!embedding_ckpt.empty()) req.embedding_checkpoint = embedding_ckpt;
      std::cout << cmd_explain(ws, req);
    }
    if (reproduce->parsed()) cmd_reproduce(ws);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Data);
  }
  return 0;
}

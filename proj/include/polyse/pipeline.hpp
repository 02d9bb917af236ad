#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "polyse/config.hpp"
#include "polyse/dataset.hpp"
#include "polyse/evaluator.hpp"
#include "polyse/graph.hpp"
#include "polyse/ingest.hpp"

namespace polyse {

// Output layout under cfg.output_dir:
//   ingest/stats.txt
//   split/splits.tsv
//   <regime>/features/features.tsv
//   <regime>/<model>/checkpoint.bin, train_log.tsv
//   <regime>/<model>/eval/report.txt, summary.json
//   <regime>/<model>/explain/<drug>__<drug>__<side effect>.txt
//   results.txt
// Every directory written also holds manifest.txt and config.conf.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path ingest_dir() const { return root / "ingest"; }
  std::filesystem::path split_dir() const { return root / "split"; }
  std::filesystem::path splits_file() const { return split_dir() / "splits.tsv"; }
  std::filesystem::path features_dir(Regime r) const { return root / to_string(r) / "features"; }
  std::filesystem::path features_file(Regime r) const { return features_dir(r) / "features.tsv"; }
  std::filesystem::path model_dir(Regime r, const std::string& model) const {
    return root / to_string(r) / model;
  }
  std::filesystem::path checkpoint_file(Regime r, const std::string& model) const {
    return model_dir(r, model) / "checkpoint.bin";
  }
  std::filesystem::path eval_dir(Regime r, const std::string& model) const {
    return model_dir(r, model) / "eval";
  }
  std::filesystem::path results_file() const { return root / "results.txt"; }
};

// Caches the ingested graph and splits across commands of one process.
class Workspace {
 public:
  explicit Workspace(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const Layout& layout() const { return layout_; }
  std::ostream* log() const { return log_; }
  void set_log(std::ostream* os) { log_ = os; }

  const IngestResult& ingested();
  // Requires split/splits.tsv; checks it was produced from the same data.
  const Splits& splits();
  // Shares another workspace's cached graph and splits (same data assumed).
  void adopt(const Workspace& other);

 private:
  RunConfig cfg_;
  Layout layout_;
  std::ostream* log_ = nullptr;
  std::shared_ptr<const IngestResult> ingest_;
  std::shared_ptr<const Splits> splits_;
};

struct ExplainRequest {
  std::string drug_a;
  std::string drug_b;
  std::string side_effect;
  std::optional<std::filesystem::path> checkpoint;            // default: combined model
  std::optional<std::filesystem::path> embedding_checkpoint;  // default: same params
};

void cmd_ingest(Workspace& ws);
void cmd_split(Workspace& ws);
void cmd_featurize(Workspace& ws);
void cmd_train(Workspace& ws);
EvalReport cmd_eval(Workspace& ws, std::optional<std::filesystem::path> checkpoint = {});
// Writes the explanation file and returns its text.
std::string cmd_explain(Workspace& ws, const ExplainRequest& req);
// ingest, split, then featurize/train/eval per regime, and results.txt.
void cmd_reproduce(Workspace& ws);

// FNV-1a of a file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace polyse

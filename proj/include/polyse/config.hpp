#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "polyse/dataset.hpp"
#include "polyse/features.hpp"
#include "polyse/ingest.hpp"
#include "polyse/trainer.hpp"

namespace polyse {

enum class ModelType { Poe, Baseline };

// Fully resolved run configuration.
struct RunConfig {
  DatasetPaths data;
  IngestSchema schema;
  SplitSpec split;
  Regime regime = Regime::Full;
  std::size_t min_support = 10;
  SupportPairs support_pairs = SupportPairs::TrainPositives;
  ModelType model_type = ModelType::Poe;
  TrainConfig train;  // train.mode, train.seed, train.threads mirror the run keys
  std::filesystem::path output_dir = "out";
  std::size_t explain_top_n = 10;
  std::uint64_t seed = 17;
  std::size_t threads = 1;
  bool deterministic = false;

  // Propagates seed/threads/deterministic into the nested structs.
  void sync();
  // Directory name of the configured model: baseline, embedding_only or combined.
  std::string model_name() const;
};

// Reads `key = value` lines; `#` starts a comment line. Unknown keys and
// malformed values raise ConfigError. Relative data paths resolve against
// the config file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});

// Sets one key as if read from a config file (paths are taken as given).
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Effective configuration in the same format, every key present, in a
// fixed order.
std::string to_config_text(const RunConfig& cfg);

// Default table: `key = default  # type: description` per key.
void print_config_schema(std::ostream& os);

std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace polyse

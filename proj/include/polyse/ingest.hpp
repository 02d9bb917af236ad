#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "polyse/graph.hpp"

namespace polyse {

// Relation keys for the non-polypharmacy relations.
inline constexpr const char* kHasTargetKey = "hasTarget";
inline constexpr const char* kInteractsWithKey = "interactsWith";
inline constexpr const char* kMonoSideEffectKey = "monoSideEffect";

// Column mapping for the four input tables. Defaults follow the public
// Decagon CSV release.
struct IngestSchema {
  char delimiter = ',';
  std::array<std::string, 2> ppi_columns{"Gene 1", "Gene 2"};
  std::array<std::string, 2> target_columns{"STITCH", "Gene"};
  // drug 1, drug 2, side-effect code, side-effect name
  std::array<std::string, 4> combo_columns{"STITCH 1", "STITCH 2",
                                           "Polypharmacy Side Effect",
                                           "Side Effect Name"};
  // drug, side-effect code, side-effect name
  std::array<std::string, 3> mono_columns{"STITCH", "Individual Side Effect",
                                          "Side Effect Name"};
  // Self-interactions (present in some PPI dumps) are dropped and counted
  // when true; otherwise they abort ingestion.
  bool skip_self_loops = true;
};

struct DatasetPaths {
  std::filesystem::path ppi;
  std::filesystem::path targets;
  std::filesystem::path combo;
  std::filesystem::path mono;
};

struct GraphStats {
  std::size_t n_proteins = 0;
  std::size_t n_drugs = 0;
  std::size_t n_ppi = 0;
  std::size_t n_drug_drug = 0;
  std::size_t n_drug_target = 0;
  std::size_t n_mono_assoc = 0;
  std::size_t n_distinct_mono = 0;
  std::size_t n_distinct_poly = 0;

  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

struct StatField {
  const char* name;
  std::size_t GraphStats::*member;
};

// Field order used in reports.
const std::array<StatField, 8>& stat_fields();

// Counts published for the preprocessed Decagon release.
GraphStats decagon_reference_stats();

struct IngestResult {
  KnowledgeGraph graph;
  GraphStats stats;
  std::size_t self_loops_skipped = 0;
  std::size_t duplicate_rows = 0;
};

// Parses combo, targets, PPI and mono tables (in that order) into a frozen
// graph. Any malformed row raises ParseError naming the file and line.
IngestResult ingest_dataset(const DatasetPaths& paths, const IngestSchema& schema);

GraphStats compute_stats(const KnowledgeGraph& g);

struct StatMismatch {
  std::string field;
  std::size_t expected;
  std::size_t actual;
};

std::vector<StatMismatch> validate_stats(const GraphStats& actual,
                                         const GraphStats& expected);

// One `name expected actual` line per field.
void write_stats_report(std::ostream& os, const GraphStats& actual,
                        const GraphStats& expected);

// Splits one delimited record. Double-quoted fields may contain the
// delimiter; a doubled quote inside quotes is a literal quote.
std::vector<std::string> split_record(const std::string& line, char delimiter);

}  // namespace polyse

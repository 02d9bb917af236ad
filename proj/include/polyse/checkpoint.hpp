#pragma once

#include <cstdint>
#include <filesystem>

#include "polyse/graph.hpp"
#include "polyse/model.hpp"

namespace polyse {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian):
//   char[8]  magic "PSECKPT\0"
//   u32      format version
//   u32      dim
//   u64      entity count, relation count, feature count
//   u64      feature-space hash
//   u32      score mode
//   u32[]    entity ids, then relation ids
//   f64[]    entity table, DistMult weights, relational weights (id order)
struct CheckpointInfo {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t feature_space_hash = 0;
  ScoreMode mode = ScoreMode::Combined;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const CheckpointInfo& info);

// Rejects files whose feature-space hash differs from the expected one, or
// whose ids are not interned in g with the recorded kinds.
ModelParams load_checkpoint(const std::filesystem::path& path, const KnowledgeGraph& g,
                            std::uint64_t expected_space_hash,
                            CheckpointInfo* info = nullptr);

// Baseline: magic "PSEBASE\0", version, dim, relation count, vocabulary
// size, vocabulary ids, relation ids, weights, biases.
void save_baseline(const std::filesystem::path& path, const BaselineParams& params,
                   const BaselineVocabulary& vocab);
BaselineParams load_baseline(const std::filesystem::path& path, const KnowledgeGraph& g,
                             BaselineVocabulary* vocab);

}  // namespace polyse

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "polyse/graph.hpp"
#include "polyse/ingest.hpp"

namespace polyse {

// Synthetic graph whose side effects follow interacting-target rules.
//
// Every drug targets `hub_targets` of the first `n_hubs` proteins plus up
// to `extra_targets` others. Each side effect owns `rules_per_side_effect`
// hub-hub interactions; a drug pair carries the side effect when one drug
// targets one end of such an interaction and the other drug the other end.
// On top of that, noise_fraction * (rule pairs) random pairs are added per
// side effect.
struct PlantedRuleConfig {
  std::size_t n_drugs = 200;
  std::size_t n_proteins = 300;
  std::size_t n_hubs = 150;
  std::size_t hub_targets = 2;
  std::size_t extra_targets = 2;
  std::size_t hub_interactions = 800;
  std::size_t other_interactions = 500;
  std::size_t n_side_effects = 32;
  std::size_t rules_per_side_effect = 20;
  double noise_fraction = 0.1;
  std::size_t n_mono_effects = 60;
  std::size_t mono_per_drug = 4;
  std::uint64_t seed = 7;
};

struct PlantedRuleDataset {
  KnowledgeGraph graph;  // frozen
  // Planted (p, q) interactions per side effect, in relation order.
  std::vector<std::vector<std::pair<EntityId, EntityId>>> rules;
};

PlantedRuleDataset make_planted_rule_dataset(const PlantedRuleConfig& cfg);

// Writes g as the four delimited tables read by ingest_dataset with the
// default schema.
void write_dataset_files(const KnowledgeGraph& g, const DatasetPaths& paths);

}  // namespace polyse

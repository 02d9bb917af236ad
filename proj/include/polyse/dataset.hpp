#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "polyse/graph.hpp"

namespace polyse {

enum class Label : std::uint8_t { Negative = 0, Positive = 1 };

struct Example {
  EntityId drug_a;  // drug_a < drug_b
  EntityId drug_b;
  RelationId side_effect;
  Label label = Label::Positive;

  DrugPair pair() const { return DrugPair{drug_a, drug_b}; }
  Triple triple() const { return Triple{drug_a, side_effect, drug_b}; }
  bool positive() const { return label == Label::Positive; }
  friend bool operator==(const Example&, const Example&) = default;
};

Example make_example(EntityId a, EntityId b, RelationId r, Label label);

struct SplitSpec {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
  std::uint64_t seed = 17;

  // Throws ConfigError unless each fraction is in (0,1) and they sum to 1.
  void validate() const;
};

enum class Regime { Full, DrugDrugOnly, TargetedDrugsOnly };

const char* to_string(Regime regime);
Regime parse_regime(const std::string& name);

struct Splits {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;

  std::size_t size() const { return train.size() + valid.size() + test.size(); }
  friend bool operator==(const Splits&, const Splits&) = default;
};

// Drugs that take part in at least one polypharmacy triple, by id.
std::vector<EntityId> polypharmacy_drugs(const KnowledgeGraph& g);

// Every polypharmacy triple of g as a positive example, in triple order.
std::vector<Example> positive_examples(const KnowledgeGraph& g);

// For each side effect, draws as many absent drug pairs as it has positives.
// Pairs are drawn from polypharmacy_drugs(g). Throws Exhausted when a side
// effect has more positives than non-edges.
std::vector<Example> sample_negatives(const KnowledgeGraph& g,
                                      std::uint64_t seed);

// Within every (side effect, label) stratum: floor(n*valid) to valid,
// floor(n*test) to test, the remainder to train.
Splits stratified_split(std::span<const Example> examples, const SplitSpec& spec);

// Graph used for training and feature extraction: every non-polypharmacy
// triple of g plus the polypharmacy triples of training positives.
// Validation and test positives are not edges of this graph.
KnowledgeGraph training_graph(const KnowledgeGraph& g, const Splits& splits);

struct RegimeView {
  KnowledgeGraph graph;
  Splits splits;
};

// Full is the identity. DrugDrugOnly drops HasTarget and InteractsWith
// triples. TargetedDrugsOnly drops every drug without a HasTarget triple,
// together with its triples and every example that mentions it.
RegimeView apply_regime(const KnowledgeGraph& g, const Splits& splits,
                        Regime regime);

// Split file: manifest header line followed by tab-separated
// `drug_a drug_b side_effect label split` rows using external keys.
struct SplitManifest {
  std::uint64_t dataset_hash = 0;
  SplitSpec spec;
};

void write_splits(std::ostream& os, const KnowledgeGraph& g, const Splits& s,
                  const SplitManifest& manifest);
void write_splits(const std::filesystem::path& path, const KnowledgeGraph& g,
                  const Splits& s, const SplitManifest& manifest);
Splits read_splits(const std::filesystem::path& path, const KnowledgeGraph& g,
                   SplitManifest* manifest = nullptr);

// Negatives + stratified split in one step, as the split command does it.
Splits build_splits(const KnowledgeGraph& g, const SplitSpec& spec);

}  // namespace polyse

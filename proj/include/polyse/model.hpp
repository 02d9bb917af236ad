#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polyse/features.hpp"
#include "polyse/graph.hpp"

namespace polyse {

enum class ScoreMode {
  // DistMult expert alone.
  EmbeddingOnly,
  // Product of the DistMult and relational-feature experts.
  Combined,
};

const char* to_string(ScoreMode mode);
ScoreMode parse_score_mode(const std::string& name);

// Parameters of both experts.
//
// Embedding rows exist only for the entities given at construction (the
// drugs that appear in scored triples); each polypharmacy relation owns a
// DistMult weight vector of length dim and a relational weight vector of
// length n_features. Tables are dense, row-major, in the order of
// entities() and relations().
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(std::size_t dim, std::vector<EntityId> entities,
              std::vector<RelationId> relations, std::size_t n_features);

  std::size_t dim() const { return dim_; }
  std::size_t n_features() const { return n_features_; }
  std::span<const EntityId> entities() const { return entities_; }
  std::span<const RelationId> relations() const { return relations_; }

  bool has_embedding(EntityId e) const { return row(e) >= 0; }
  bool has_relation(RelationId r) const { return slot(r) >= 0; }
  // Row in the entity table, -1 if absent.
  std::int64_t row(EntityId e) const {
    return e.index < entity_row_.size() ? entity_row_[e.index] : -1;
  }
  std::int64_t slot(RelationId r) const {
    return r.index < relation_slot_.size() ? relation_slot_[r.index] : -1;
  }

  // These throw MissingEmbedding for unknown ids.
  std::span<const double> embedding(EntityId e) const;
  std::span<double> embedding(EntityId e);
  std::span<const double> embed_weights(RelationId r) const;
  std::span<double> embed_weights(RelationId r);
  std::span<const double> rel_weights(RelationId r) const;
  std::span<double> rel_weights(RelationId r);

  std::vector<double>& entity_table() { return entity_table_; }
  const std::vector<double>& entity_table() const { return entity_table_; }
  std::vector<double>& embed_table() { return embed_table_; }
  const std::vector<double>& embed_table() const { return embed_table_; }
  std::vector<double>& rel_table() { return rel_table_; }
  const std::vector<double>& rel_table() const { return rel_table_; }

  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t n_features_ = 0;
  std::vector<EntityId> entities_;
  std::vector<RelationId> relations_;
  std::vector<std::int64_t> entity_row_;
  std::vector<std::int64_t> relation_slot_;
  std::vector<double> entity_table_;
  std::vector<double> embed_table_;
  std::vector<double> rel_table_;
};

// Embeddings and DistMult weights uniform on [-6/sqrt(dim), 6/sqrt(dim)];
// relational weights zero so training starts at the embedding expert.
ModelParams initialize_params(std::vector<EntityId> entities,
                              std::vector<RelationId> relations,
                              std::size_t n_features, std::size_t dim,
                              std::uint64_t seed);

// (e_h * e_t) . w^r, the log of the embedding expert.
double distmult_score(const ModelParams& params, EntityId h, RelationId r, EntityId t);

// r_(h,t) . w^r_rel for a binary feature vector, summed in index order.
double relational_score(const ModelParams& params, RelationId r, const FeatureVector& fv);

// Log of the unnormalized product-of-experts numerator. Experts of other
// relations contribute a factor of one and drop out.
double poe_logit(const ModelParams& params, const FeatureVector& fv, EntityId h,
                 RelationId r, EntityId t, ScoreMode mode);
double poe_logit(const ModelParams& params, const FeatureCache& features,
                 EntityId h, RelationId r, EntityId t, ScoreMode mode);

// exp(logits[index]) / sum exp(logits), with max subtraction.
double softmax_probability(std::span<const double> logits, std::size_t index);

// Probability of d normalized over the candidate triples. `features` may be
// null in EmbeddingOnly mode.
double poe_probability(const ModelParams& params, const FeatureCache* features,
                       std::span<const Triple> candidates, const Triple& d,
                       ScoreMode mode);

// Read-only scorer bundling parameters, features and mode.
class PoeScorer {
 public:
  PoeScorer(const ModelParams& params, const FeatureCache* features, ScoreMode mode);

  double logit(EntityId h, RelationId r, EntityId t) const;
  const ModelParams& params() const { return params_; }
  const FeatureCache* features() const { return features_; }
  ScoreMode mode() const { return mode_; }

 private:
  const ModelParams& params_;
  const FeatureCache* features_;
  ScoreMode mode_;
};

// ---- Indicator baseline ----

struct BinaryVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;  // sorted

  friend bool operator==(const BinaryVector&, const BinaryVector&) = default;
};

// Per-drug indicator vocabulary: mono side effects first, then targeted
// proteins, each in id order.
class BaselineVocabulary {
 public:
  BaselineVocabulary() = default;
  explicit BaselineVocabulary(std::vector<EntityId> terms);

  // Mono effects and targeted proteins that occur in g.
  static BaselineVocabulary from_graph(const KnowledgeGraph& g);

  std::size_t size() const { return terms_.size(); }
  std::span<const EntityId> terms() const { return terms_; }
  // Sorted indices of the drug's indicators in [0, size()).
  std::vector<std::uint32_t> indicators(const KnowledgeGraph& g, EntityId drug) const;
  std::uint64_t hash() const;

  friend bool operator==(const BaselineVocabulary&, const BaselineVocabulary&) = default;

 private:
  std::vector<EntityId> terms_;
  std::vector<std::int64_t> position_;  // entity index -> term position
};

// [indicators(first) ; indicators(second)] with the pair in canonical order.
BinaryVector baseline_featurize(const KnowledgeGraph& g, const BaselineVocabulary& vocab,
                                EntityId a, EntityId b);

// Logistic-linear model per side effect.
struct BaselineParams {
  std::size_t dim = 0;
  std::vector<RelationId> relations;
  std::vector<double> weights;  // relations.size() x dim
  std::vector<double> bias;     // relations.size()

  BaselineParams() = default;
  BaselineParams(std::size_t dim, std::vector<RelationId> relations);

  std::int64_t slot(RelationId r) const;
  std::span<const double> weights_of(std::size_t slot) const {
    return std::span<const double>(weights).subspan(slot * dim, dim);
  }
  friend bool operator==(const BaselineParams&, const BaselineParams&) = default;

 private:
  std::vector<std::int64_t> slot_;
};

// w_r . x + b_r. Throws DimensionMismatch if x.dim differs or an index is
// out of range.
double baseline_score(const BaselineParams& bp, const BinaryVector& x, RelationId r);

}  // namespace polyse

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "polyse/features.hpp"
#include "polyse/graph.hpp"
#include "polyse/model.hpp"

namespace polyse {

struct RankedCandidate {
  DrugPair pair;
  double logit = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct RankingResult {
  RelationId side_effect;
  std::vector<RankedCandidate> candidates;  // descending logit

  std::size_t size() const { return candidates.size(); }
  // Throws UnknownPair if the pair was not ranked.
  std::size_t rank_of(DrugPair pair) const;
  const RankedCandidate& find(DrugPair pair) const;
};

// Unordered pairs of distinct drugs without a known edge of this side
// effect in `known`.
std::vector<DrugPair> default_candidates(const KnowledgeGraph& known,
                                         std::span<const EntityId> drugs,
                                         RelationId side_effect);

// Sorts candidates by descending logit. Equal logits are ordered by pair
// id so the ranking does not depend on input order.
RankingResult rank_candidates(const PoeScorer& scorer, RelationId side_effect,
                              std::span<const DrugPair> candidates);

struct FeatureContribution {
  std::uint32_t feature = 0;
  double value = 0.0;  // w^r_rel[feature] for an active binary feature
};

struct Attribution {
  DrugPair pair;
  RelationId side_effect;
  double embedding_contribution = 0.0;
  // Active features only, by descending |value|, ties by feature index.
  std::vector<FeatureContribution> feature_contributions;
  // Combined logit: embedding_contribution plus the contributions summed in
  // feature-index order, which is how relational_score accumulates them.
  double logit = 0.0;

  double feature_total() const;
};

Attribution attribute(const ModelParams& params, const FeatureCache& features,
                      DrugPair pair, RelationId side_effect);

struct ExplanationQuery {
  DrugPair pair;
  RelationId side_effect;
  std::size_t top_n = 10;
};

// Text block: pair, side-effect name, logits and ranks under both modes,
// and the strongest feature contributions with protein names.
void write_explanation(std::ostream& os, const KnowledgeGraph& g,
                       const RelationalFeatureSpace& space, const ExplanationQuery& query,
                       const RankingResult& embedding_ranking,
                       const RankingResult& combined_ranking, const Attribution& attribution);

}  // namespace polyse

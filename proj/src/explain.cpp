#include "polyse/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "polyse/error.hpp"

namespace polyse {

std::size_t RankingResult::rank_of(DrugPair pair) const { return find(pair).rank; }

const RankedCandidate& RankingResult::find(DrugPair pair) const {
  const DrugPair p = DrugPair::canonical(pair.first, pair.second);
  for (const RankedCandidate& c : candidates) {
    if (c.pair == p) return c;
  }
  throw UnknownPair("pair is not in the candidate set");
}

std::vector<DrugPair> default_candidates(const KnowledgeGraph& known,
                                         std::span<const EntityId> drugs,
                                         RelationId side_effect) {
  std::vector<DrugPair> out;
  for (std::size_t i = 0; i < drugs.size(); ++i) {
    for (std::size_t j = i + 1; j < drugs.size(); ++j) {
      const DrugPair p = DrugPair::canonical(drugs[i], drugs[j]);
      if (p.first == p.second) continue;
      if (!known.contains(Triple{p.first, side_effect, p.second})) out.push_back(p);
    }
  }
  return out;
}

RankingResult rank_candidates(const PoeScorer& scorer, RelationId side_effect,
                              std::span<const DrugPair> candidates) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  RankingResult result;
  result.side_effect = side_effect;
  result.candidates.reserve(candidates.size());
  for (const DrugPair& raw : candidates) {
    const DrugPair p = DrugPair::canonical(raw.first, raw.second);
    result.candidates.push_back(
        RankedCandidate{p, scorer.logit(p.first, side_effect, p.second), 0});
  }
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const RankedCandidate& a, const RankedCandidate& b) {
              if (a.logit != b.logit) return a.logit > b.logit;
              return a.pair < b.pair;
            });
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    result.candidates[i].rank = i + 1;
  }
  return result;
}

double Attribution::feature_total() const {
  std::vector<FeatureContribution> by_index = feature_contributions;
  std::sort(by_index.begin(), by_index.end(),
            [](const auto& a, const auto& b) { return a.feature < b.feature; });
  double s = 0.0;
  for (const auto& c : by_index) s += c.value;
  return s;
}

Attribution attribute(const ModelParams& params, const FeatureCache& features,
                      DrugPair pair, RelationId side_effect) {
  const DrugPair p = DrugPair::canonical(pair.first, pair.second);
  Attribution a;
  a.pair = p;
  a.side_effect = side_effect;
  a.embedding_contribution = distmult_score(params, p.first, side_effect, p.second);
  const FeatureVector& fv = features.get(p.first, p.second);
  const auto w = params.rel_weights(side_effect);
  for (std::uint32_t i : fv.indices) {
    if (i >= w.size()) throw IndexOutOfRange("feature index outside relational weights");
    a.feature_contributions.push_back({i, w[i]});
  }
  a.logit = a.embedding_contribution + relational_score(params, side_effect, fv);
  std::stable_sort(a.feature_contributions.begin(), a.feature_contributions.end(),
                   [](const auto& x, const auto& y) {
                     return std::abs(x.value) > std::abs(y.value);
                   });
  return a;
}

void write_explanation(std::ostream& os, const KnowledgeGraph& g,
                       const RelationalFeatureSpace& space, const ExplanationQuery& query,
                       const RankingResult& embedding_ranking,
                       const RankingResult& combined_ranking, const Attribution& attribution) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  const DrugPair p = DrugPair::canonical(query.pair.first, query.pair.second);
  const auto& emb = embedding_ranking.find(p);
  const auto& comb = combined_ranking.find(p);
  os << "pair " << g.entity_key(p.first) << ' ' << g.entity_key(p.second) << '\n';
  os << "side_effect " << g.relation_key(query.side_effect) << ' '
     << g.relation_label(query.side_effect) << '\n';
  os << "candidates " << combined_ranking.size() << '\n';
  os << "embedding_only logit " << num(emb.logit) << " rank " << emb.rank << '\n';
  os << "combined logit " << num(comb.logit) << " rank " << comb.rank << '\n';
  os << "embedding_contribution " << num(attribution.embedding_contribution) << '\n';
  os << "features " << attribution.feature_contributions.size() << '\n';
  const std::size_t n = std::min(query.top_n, attribution.feature_contributions.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = attribution.feature_contributions[i];
    const FeatureTemplate& t = space.at(c.feature);
    os << "  " << num(c.value) << ' ' << to_string(t.kind) << ' ' << g.entity_key(t.first);
    if (t.kind == TemplateKind::InteractingTargets) os << ',' << g.entity_key(t.second);
    os << '\n';
  }
}

}  // namespace polyse

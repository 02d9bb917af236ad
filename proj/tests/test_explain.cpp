#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "polyse/error.hpp"
#include "polyse/explain.hpp"

using namespace polyse;

namespace {

struct ExplainToy {
  std::unique_ptr<fixture::Toy> t;
  RelationalFeatureSpace space;
  std::unique_ptr<FeatureCache> cache;
  ModelParams params;

  explicit ExplainToy(std::uint64_t seed) {
    Rng rng = make_rng(seed, 0);
    t = fixture::random_toy(rng, 10, 6, 2, 0.35, 0.4, 0.2);
    std::vector<DrugPair> pairs;
    for (std::size_t a = 0; a < 10; ++a) {
      for (std::size_t b = a + 1; b < 10; ++b) pairs.push_back(t->pair(a, b));
    }
    space = enumerate_templates(t->g, pairs, 1);
    cache = std::make_unique<FeatureCache>(space, t->g);
    params = initialize_params(t->drugs, t->side_effects, space.size(), 5, seed);
    for (double& w : params.rel_table()) w = uniform_real(rng, -1, 1);
  }
};

}  // namespace

TEST_CASE("single candidate ranks first") {
  ExplainToy x(1);
  const PoeScorer scorer(x.params, x.cache.get(), ScoreMode::Combined);
  const std::vector<DrugPair> one{x.t->pair(3, 4)};
  const RankingResult r = rank_candidates(scorer, x.t->side_effects[0], one);
  REQUIRE(r.size() == 1);
  CHECK(r.rank_of(x.t->pair(4, 3)) == 1);
  CHECK_THROWS_AS(r.rank_of(x.t->pair(0, 1)), UnknownPair);
}

TEST_CASE("hand-set weights give the hand-computed order") {
  fixture::Toy t(4, 0, 1);
  ModelParams p(1, t.drugs, t.side_effects, 0);
  const RelationId r = t.side_effects[0];
  // logits e_a * e_b: (0,1)=2, (0,2)=-1, (0,3)=3, (1,2)=-2, (1,3)=6, (2,3)=-3
  const std::vector<double> e{1, 2, -1, 3};
  for (std::size_t i = 0; i < 4; ++i) p.embedding(t.drugs[i])[0] = e[i];
  p.embed_weights(r)[0] = 1;
  const PoeScorer scorer(p, nullptr, ScoreMode::EmbeddingOnly);
  const auto cands = default_candidates(t.g, t.drugs, r);
  REQUIRE(cands.size() == 6);
  const RankingResult res = rank_candidates(scorer, r, cands);
  const std::vector<DrugPair> want{t.pair(1, 3), t.pair(0, 3), t.pair(0, 1),
                                   t.pair(0, 2), t.pair(1, 2), t.pair(2, 3)};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(res.candidates[i].pair == want[i]);
    CHECK(res.candidates[i].rank == i + 1);
  }
  CHECK(res.candidates[0].logit == 6.0);
}

TEST_CASE("default candidates skip known edges") {
  fixture::Toy t(4, 0, 2);
  t.edge(0, 0, 1);
  t.edge(2, 1, 3);
  const auto c = default_candidates(t.g, t.drugs, t.side_effects[0]);
  CHECK(c.size() == 5);
  CHECK(std::find(c.begin(), c.end(), t.pair(0, 1)) == c.end());
  CHECK(std::find(c.begin(), c.end(), t.pair(2, 3)) != c.end());
}

TEST_CASE("ranking does not depend on candidate order") {
  ExplainToy x(2);
  const PoeScorer scorer(x.params, x.cache.get(), ScoreMode::Combined);
  const RelationId r = x.t->side_effects[1];
  auto cands = default_candidates(x.t->g, x.t->drugs, r);
  const RankingResult a = rank_candidates(scorer, r, cands);
  Rng rng = make_rng(5, 0);
  shuffle(std::span<DrugPair>(cands), rng);
  const RankingResult b = rank_candidates(scorer, r, cands);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.candidates[i].pair == b.candidates[i].pair);
    CHECK(a.candidates[i].rank == i + 1);
    if (i > 0) CHECK(a.candidates[i - 1].logit >= a.candidates[i].logit);
  }
  // Ties: every candidate scores zero.
  ModelParams zero(5, x.t->drugs, x.t->side_effects, x.space.size());
  const PoeScorer flat(zero, x.cache.get(), ScoreMode::Combined);
  const RankingResult c = rank_candidates(flat, r, cands);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c.candidates[i - 1].pair < c.candidates[i].pair);
}

TEST_CASE("attribution is an exact additive decomposition") {
  for (std::uint64_t seed = 3; seed < 13; ++seed) {
    ExplainToy x(seed);
    for (std::size_t a = 0; a < 10; ++a) {
      for (std::size_t b = a + 1; b < 10; ++b) {
        const DrugPair pair = x.t->pair(a, b);
        for (RelationId r : x.t->side_effects) {
          const Attribution at = attribute(x.params, *x.cache, pair, r);
          const double logit = poe_logit(x.params, *x.cache, pair.first, r, pair.second, ScoreMode::Combined);
          CHECK(at.logit == logit);
          CHECK(std::abs(at.embedding_contribution + at.feature_total() - logit) <= 1e-12);
          CHECK(at.embedding_contribution == distmult_score(x.params, pair.first, r, pair.second));
          const FeatureVector& fv = x.cache->get(pair.first, pair.second);
          CHECK(at.feature_contributions.size() == fv.indices.size());
          for (std::size_t i = 1; i < at.feature_contributions.size(); ++i) {
            CHECK(std::abs(at.feature_contributions[i - 1].value) >=
                  std::abs(at.feature_contributions[i].value));
          }
          // Dropping one feature moves the logit by its contribution.
          for (const auto& c : at.feature_contributions) {
            FeatureVector less;
            for (std::uint32_t f : fv.indices) {
              if (f != c.feature) less.indices.push_back(f);
            }
            const double without = at.embedding_contribution + relational_score(x.params, r, less);
            CHECK(std::abs(logit - without - c.value) <= 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("attribution edge cases") {
  ExplainToy x(4);
  const RelationId r = x.t->side_effects[0];
  // A pair with no active features.
  bool found_empty = false;
  for (std::size_t a = 0; a < 10 && !found_empty; ++a) {
    for (std::size_t b = a + 1; b < 10 && !found_empty; ++b) {
      if (!x.cache->get(x.t->drugs[a], x.t->drugs[b]).empty()) continue;
      found_empty = true;
      const Attribution at = attribute(x.params, *x.cache, x.t->pair(a, b), r);
      CHECK(at.feature_contributions.empty());
      CHECK(at.embedding_contribution == at.logit);
    }
  }
  CHECK(found_empty);
  for (double& w : x.params.rel_table()) w = 0.0;
  const Attribution at = attribute(x.params, *x.cache, x.t->pair(0, 1), r);
  for (const auto& c : at.feature_contributions) CHECK(c.value == 0.0);
}

TEST_CASE("explanation text names both modes") {
  ExplainToy x(6);
  const RelationId r = x.t->side_effects[0];
  const auto cands = default_candidates(x.t->g, x.t->drugs, r);
  REQUIRE_FALSE(cands.empty());
  const DrugPair pair = cands.front();
  ModelParams emb(5, x.t->drugs, x.t->side_effects, 0);
  emb.entity_table() = x.params.entity_table();
  emb.embed_table() = x.params.embed_table();
  const RankingResult re = rank_candidates(PoeScorer(emb, nullptr, ScoreMode::EmbeddingOnly), r, cands);
  const RankingResult rc =
      rank_candidates(PoeScorer(x.params, x.cache.get(), ScoreMode::Combined), r, cands);
  std::ostringstream os;
  write_explanation(os, x.t->g, x.space, ExplanationQuery{pair, r, 3}, re, rc,
                    attribute(x.params, *x.cache, pair, r));
  const std::string text = os.str();
  CHECK(text.find(x.t->g.entity_key(pair.first)) != std::string::npos);
  CHECK(text.find("embedding_only") != std::string::npos);
  CHECK(text.find("combined") != std::string::npos);
}

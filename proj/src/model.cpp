#include "polyse/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polyse/error.hpp"
#include "polyse/random.hpp"

namespace polyse {

namespace {

template <typename Id>
std::vector<std::int64_t> index_map(std::span<const Id> ids) {
  std::uint32_t max_index = 0;
  for (const Id& id : ids) max_index = std::max(max_index, id.index);
  std::vector<std::int64_t> map(ids.empty() ? 0 : max_index + 1, -1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (map[ids[i].index] >= 0) throw std::invalid_argument("duplicate id");
    map[ids[i].index] = static_cast<std::int64_t>(i);
  }
  return map;
}

}  // namespace

const char* to_string(ScoreMode mode) {
  return mode == ScoreMode::EmbeddingOnly ? "embedding_only" : "combined";
}

ScoreMode parse_score_mode(const std::string& name) {
  if (name == "embedding_only") return ScoreMode::EmbeddingOnly;
  if (name == "combined") return ScoreMode::Combined;
  throw ConfigError("unknown model mode '" + name + "'");
}

ModelParams::ModelParams(std::size_t dim, std::vector<EntityId> entities,
                         std::vector<RelationId> relations, std::size_t n_features)
    : dim_(dim),
      n_features_(n_features),
      entities_(std::move(entities)),
      relations_(std::move(relations)) {
  for (const RelationId& r : relations_) {
    if (r.kind != RelationKind::PolypharmacySideEffect) {
      throw std::invalid_argument("model relations must be polypharmacy side effects");
    }
  }
  entity_row_ = index_map<EntityId>(entities_);
  relation_slot_ = index_map<RelationId>(relations_);
  entity_table_.assign(entities_.size() * dim_, 0.0);
  embed_table_.assign(relations_.size() * dim_, 0.0);
  rel_table_.assign(relations_.size() * n_features_, 0.0);
}

std::span<const double> ModelParams::embedding(EntityId e) const {
  const std::int64_t i = row(e);
  if (i < 0) throw MissingEmbedding("no embedding for entity " + std::to_string(e.index));
  return std::span<const double>(entity_table_).subspan(i * dim_, dim_);
}

std::span<double> ModelParams::embedding(EntityId e) {
  const std::int64_t i = row(e);
  if (i < 0) throw MissingEmbedding("no embedding for entity " + std::to_string(e.index));
  return std::span<double>(entity_table_).subspan(i * dim_, dim_);
}

std::span<const double> ModelParams::embed_weights(RelationId r) const {
  const std::int64_t s = slot(r);
  if (s < 0) throw MissingEmbedding("no weights for relation " + std::to_string(r.index));
  return std::span<const double>(embed_table_).subspan(s * dim_, dim_);
}

std::span<double> ModelParams::embed_weights(RelationId r) {
  const std::int64_t s = slot(r);
  if (s < 0) throw MissingEmbedding("no weights for relation " + std::to_string(r.index));
  return std::span<double>(embed_table_).subspan(s * dim_, dim_);
}

std::span<const double> ModelParams::rel_weights(RelationId r) const {
  const std::int64_t s = slot(r);
  if (s < 0) throw MissingEmbedding("no weights for relation " + std::to_string(r.index));
  return std::span<const double>(rel_table_).subspan(s * n_features_, n_features_);
}

std::span<double> ModelParams::rel_weights(RelationId r) {
  const std::int64_t s = slot(r);
  if (s < 0) throw MissingEmbedding("no weights for relation " + std::to_string(r.index));
  return std::span<double>(rel_table_).subspan(s * n_features_, n_features_);
}

bool ModelParams::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(entity_table_) && finite(embed_table_) && finite(rel_table_);
}

ModelParams initialize_params(std::vector<EntityId> entities,
                              std::vector<RelationId> relations,
                              std::size_t n_features, std::size_t dim,
                              std::uint64_t seed) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  ModelParams p(dim, std::move(entities), std::move(relations), n_features);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  Rng rng = make_rng(seed, streams::kInit);
  for (double& x : p.entity_table()) x = uniform_real(rng, -bound, bound);
  for (double& x : p.embed_table()) x = uniform_real(rng, -bound, bound);
  return p;
}

double distmult_score(const ModelParams& params, EntityId h, RelationId r, EntityId t) {
  const auto eh = params.embedding(h);
  const auto et = params.embedding(t);
  const auto w = params.embed_weights(r);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += (eh[i] * et[i]) * w[i];
  return s;
}

double relational_score(const ModelParams& params, RelationId r, const FeatureVector& fv) {
  const auto w = params.rel_weights(r);
  double s = 0.0;
  for (std::uint32_t i : fv.indices) {
    if (i >= w.size()) {
      throw IndexOutOfRange("feature index " + std::to_string(i) +
                            " outside relational weights of size " +
                            std::to_string(w.size()));
    }
    s += w[i];
  }
  return s;
}

double poe_logit(const ModelParams& params, const FeatureVector& fv, EntityId h,
                 RelationId r, EntityId t, ScoreMode mode) {
  const double embedding = distmult_score(params, h, r, t);
  if (mode == ScoreMode::EmbeddingOnly) return embedding;
  return embedding + relational_score(params, r, fv);
}

double poe_logit(const ModelParams& params, const FeatureCache& features,
                 EntityId h, RelationId r, EntityId t, ScoreMode mode) {
  if (mode == ScoreMode::EmbeddingOnly) return distmult_score(params, h, r, t);
  return poe_logit(params, features.get(h, t), h, r, t, mode);
}

double softmax_probability(std::span<const double> logits, std::size_t index) {
  if (index >= logits.size()) throw std::out_of_range("softmax index");
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  return std::exp(logits[index] - m) / z;
}

double poe_probability(const ModelParams& params, const FeatureCache* features,
                       std::span<const Triple> candidates, const Triple& d,
                       ScoreMode mode) {
  if (mode == ScoreMode::Combined && !features) {
    throw std::invalid_argument("combined mode needs relational features");
  }
  const PoeScorer scorer(params, features, mode);
  std::vector<double> logits;
  logits.reserve(candidates.size());
  std::size_t at = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Triple& c = candidates[i];
    if (at == candidates.size() && canonical(c) == canonical(d)) at = i;
    logits.push_back(scorer.logit(c.head, c.relation, c.tail));
  }
  if (at == candidates.size()) {
    throw std::invalid_argument("triple is not among the candidates");
  }
  return softmax_probability(logits, at);
}

PoeScorer::PoeScorer(const ModelParams& params, const FeatureCache* features,
                     ScoreMode mode)
    : params_(params), features_(features), mode_(mode) {
  if (mode == ScoreMode::Combined && !features) {
    throw std::invalid_argument("combined mode needs relational features");
  }
}

double PoeScorer::logit(EntityId h, RelationId r, EntityId t) const {
  if (mode_ == ScoreMode::EmbeddingOnly) return distmult_score(params_, h, r, t);
  return poe_logit(params_, *features_, h, r, t, mode_);
}

// ---- Baseline ----

BaselineVocabulary::BaselineVocabulary(std::vector<EntityId> terms)
    : terms_(std::move(terms)) {
  position_ = index_map<EntityId>(terms_);
}

BaselineVocabulary BaselineVocabulary::from_graph(const KnowledgeGraph& g) {
  std::vector<bool> mono(g.entity_count(), false);
  std::vector<bool> targeted(g.entity_count(), false);
  for (const Triple& t : g.triples()) {
    if (t.relation.kind == RelationKind::MonoSideEffect) mono[t.tail.index] = true;
    if (t.relation.kind == RelationKind::HasTarget) targeted[t.tail.index] = true;
  }
  std::vector<EntityId> terms;
  for (std::uint32_t i = 0; i < mono.size(); ++i) {
    if (mono[i]) terms.push_back(g.entity(i));
  }
  for (std::uint32_t i = 0; i < targeted.size(); ++i) {
    if (targeted[i]) terms.push_back(g.entity(i));
  }
  return BaselineVocabulary(std::move(terms));
}

std::vector<std::uint32_t> BaselineVocabulary::indicators(const KnowledgeGraph& g,
                                                          EntityId drug) const {
  std::vector<std::uint32_t> out;
  for (RelationKind kind : {RelationKind::MonoSideEffect, RelationKind::HasTarget}) {
    const auto r = g.singleton_relation(kind);
    if (!r) continue;
    for (const EntityId e : g.neighbors(drug, *r)) {
      if (e.index < position_.size() && position_[e.index] >= 0) {
        out.push_back(static_cast<std::uint32_t>(position_[e.index]));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t BaselineVocabulary::hash() const {
  Fnv1a h;
  h.update_u64(terms_.size());
  for (const EntityId& e : terms_) h.update_u64(e.index);
  return h.digest();
}

BinaryVector baseline_featurize(const KnowledgeGraph& g, const BaselineVocabulary& vocab,
                                EntityId a, EntityId b) {
  const DrugPair p = DrugPair::canonical(a, b);
  const auto half = static_cast<std::uint32_t>(vocab.size());
  BinaryVector x;
  x.dim = 2 * vocab.size();
  x.indices = vocab.indicators(g, p.first);
  for (std::uint32_t i : vocab.indicators(g, p.second)) x.indices.push_back(half + i);
  return x;
}

BaselineParams::BaselineParams(std::size_t dim, std::vector<RelationId> rels)
    : dim(dim), relations(std::move(rels)) {
  weights.assign(relations.size() * dim, 0.0);
  bias.assign(relations.size(), 0.0);
  slot_ = index_map<RelationId>(relations);
}

std::int64_t BaselineParams::slot(RelationId r) const {
  return r.index < slot_.size() ? slot_[r.index] : -1;
}

double baseline_score(const BaselineParams& bp, const BinaryVector& x, RelationId r) {
  if (x.dim != bp.dim) {
    throw DimensionMismatch("baseline input has dimension " + std::to_string(x.dim) +
                            ", model expects " + std::to_string(bp.dim));
  }
  const std::int64_t s = bp.slot(r);
  if (s < 0) throw MissingEmbedding("baseline has no weights for relation " + std::to_string(r.index));
  const auto w = bp.weights_of(static_cast<std::size_t>(s));
  double z = 0.0;
  for (std::uint32_t i : x.indices) {
    if (i >= bp.dim) throw DimensionMismatch("baseline input index out of range");
    z += w[i];
  }
  return z + bp.bias[s];
}

}  // namespace polyse

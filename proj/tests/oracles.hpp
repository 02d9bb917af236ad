#pragma once

// Slow, independent reference implementations used by the unit tests and the
// acceptance binary. They share no code with the library beyond data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "polyse/evaluator.hpp"
#include "polyse/features.hpp"
#include "polyse/graph.hpp"
#include "polyse/model.hpp"
#include "polyse/trainer.hpp"

namespace oracle {

using namespace polyse;

// Pairwise comparison count; ties count one half.
inline double auroc(std::span<const ScoredExample> xs) {
  double wins = 0;
  double pairs = 0;
  for (const auto& p : xs) {
    if (!p.example.positive()) continue;
    for (const auto& n : xs) {
      if (n.example.positive()) continue;
      pairs += 1;
      if (p.score > n.score) wins += 1;
      else if (p.score == n.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

// 1-based position of example i in a stable descending sort by score.
inline std::size_t stable_rank(std::span<const ScoredExample> xs, std::size_t i) {
  std::size_t r = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (xs[j].score > xs[i].score || (xs[j].score == xs[i].score && j <= i)) ++r;
  }
  return r;
}

// Truncated average precision straight from the definition: sum of
// precision@rank over positives ranked within k, over min(k, n_pos).
inline double ap_at_k(std::span<const ScoredExample> xs, std::size_t k) {
  std::vector<std::size_t> rank(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) rank[i] = oracle::stable_rank(xs, i);
  double sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i].example.positive()) continue;
    ++n_pos;
    if (rank[i] > k) continue;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (xs[j].example.positive() && rank[j] <= rank[i]) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(rank[i]);
  }
  return sum / static_cast<double>(std::min(k, n_pos));
}

inline double aupr(std::span<const ScoredExample> xs) { return oracle::ap_at_k(xs, xs.size()); }

inline std::vector<EntityId> neighbors(const KnowledgeGraph& g, EntityId e, RelationId r) {
  std::vector<EntityId> out;
  for (const Triple& t : g.triples()) {
    if (t.relation != r) continue;
    if (t.head == e) out.push_back(t.tail);
    if (is_symmetric(r.kind) && t.tail == e) out.push_back(t.head);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline bool targets(const KnowledgeGraph& g, EntityId d, EntityId p) {
  for (const Triple& t : g.triples()) {
    if (t.relation.kind == RelationKind::HasTarget && t.head == d && t.tail == p) return true;
  }
  return false;
}

inline bool interacts(const KnowledgeGraph& g, EntityId p, EntityId q) {
  for (const Triple& t : g.triples()) {
    if (t.relation.kind != RelationKind::InteractsWith) continue;
    if ((t.head == p && t.tail == q) || (t.head == q && t.tail == p)) return true;
  }
  return false;
}

// Re-evaluates a template's logical rule from the triple list.
inline bool rule_holds(const KnowledgeGraph& g, const FeatureTemplate& f, EntityId a, EntityId b) {
  if (f.kind == TemplateKind::SharedTarget) {
    return targets(g, a, f.first) && targets(g, b, f.first);
  }
  if (!interacts(g, f.first, f.second)) return false;
  return (targets(g, a, f.first) && targets(g, b, f.second)) ||
         (targets(g, a, f.second) && targets(g, b, f.first));
}

inline std::vector<std::uint32_t> featurize(const RelationalFeatureSpace& space,
                                            const KnowledgeGraph& g, EntityId a, EntityId b) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < space.size(); ++i) {
    if (rule_holds(g, space.at(i), a, b)) out.push_back(i);
  }
  return out;
}

struct TemplateCount {
  FeatureTemplate tmpl;
  std::size_t support;
};

// Every candidate template over all proteins and interactions, with its
// support over the given pairs; only templates meeting min_support.
inline std::vector<TemplateCount> enumerate(const KnowledgeGraph& g,
                                            std::span<const DrugPair> pairs,
                                            std::size_t min_support) {
  std::vector<TemplateCount> out;
  const auto proteins = g.entities_of(EntityKind::Protein);
  auto support = [&](const FeatureTemplate& f) {
    std::size_t n = 0;
    for (const DrugPair& p : pairs) n += rule_holds(g, f, p.first, p.second);
    return n;
  };
  for (EntityId p : proteins) {
    const auto f = FeatureTemplate::shared(p);
    if (const auto n = support(f); n >= min_support && n > 0) out.push_back({f, n});
  }
  for (std::size_t i = 0; i < proteins.size(); ++i) {
    for (std::size_t j = i + 1; j < proteins.size(); ++j) {
      if (!interacts(g, proteins[i], proteins[j])) continue;
      const auto f = FeatureTemplate::interacting(proteins[i], proteins[j]);
      if (const auto n = support(f); n >= min_support && n > 0) out.push_back({f, n});
    }
  }
  return out;
}

// Loss of one positive with its corruptions, written out directly from the
// definition: -log softmax over the positive and its corruptions (no l2).
inline double instance_loss(const ModelParams& params, const FeatureCache* features,
                            const TrainingInstance& inst, ScoreMode mode) {
  auto logit = [&](const Triple& t) {
    double s = 0;
    const auto eh = params.embedding(t.head);
    const auto et = params.embedding(t.tail);
    const auto w = params.embed_weights(t.relation);
    for (std::size_t i = 0; i < params.dim(); ++i) s += eh[i] * w[i] * et[i];
    if (mode == ScoreMode::Combined) {
      const auto rel = params.rel_weights(t.relation);
      for (std::uint32_t f : features->get(t.head, t.tail).indices) s += rel[f];
    }
    return s;
  };
  std::vector<double> z{logit(inst.positive)};
  for (const Triple& c : inst.corruptions) z.push_back(logit(c));
  double sum = 0;
  for (double v : z) sum += std::exp(v);
  return std::log(sum) - z[0];
}

}  // namespace oracle

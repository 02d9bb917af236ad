#pragma once

// Toy graphs and random instances shared by unit tests and the acceptance
// binary.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "polyse/features.hpp"
#include "polyse/graph.hpp"
#include "polyse/ingest.hpp"
#include "polyse/model.hpp"
#include "polyse/random.hpp"
#include "polyse/trainer.hpp"

namespace fixture {

using namespace polyse;

struct Toy {
  KnowledgeGraph g;
  std::vector<EntityId> drugs;
  std::vector<EntityId> proteins;
  std::vector<RelationId> side_effects;
  RelationId has_target;
  RelationId interacts;

  Toy(std::size_t n_drugs, std::size_t n_proteins, std::size_t n_side_effects) {
    for (std::size_t i = 0; i < n_drugs; ++i) {
      drugs.push_back(g.intern_entity("D" + std::to_string(i), EntityKind::Drug));
    }
    for (std::size_t i = 0; i < n_proteins; ++i) {
      proteins.push_back(g.intern_entity("P" + std::to_string(i), EntityKind::Protein));
    }
    has_target = g.intern_relation(kHasTargetKey, RelationKind::HasTarget);
    interacts = g.intern_relation(kInteractsWithKey, RelationKind::InteractsWith);
    for (std::size_t i = 0; i < n_side_effects; ++i) {
      side_effects.push_back(
          g.intern_relation("S" + std::to_string(i), RelationKind::PolypharmacySideEffect));
    }
  }

  void target(std::size_t d, std::size_t p) { g.add_triple({drugs[d], has_target, proteins[p]}); }
  void ppi(std::size_t p, std::size_t q) { g.add_triple({proteins[p], interacts, proteins[q]}); }
  void edge(std::size_t a, std::size_t s, std::size_t b) {
    g.add_triple({drugs[a], side_effects[s], drugs[b]});
  }
  DrugPair pair(std::size_t a, std::size_t b) const {
    return DrugPair::canonical(drugs[a], drugs[b]);
  }
};

inline bool coin(Rng& rng, double p) { return uniform_real(rng, 0.0, 1.0) < p; }

// Random targets, interactions and side-effect edges.
inline std::unique_ptr<Toy> random_toy(Rng& rng, std::size_t n_drugs, std::size_t n_proteins,
                                       std::size_t n_side_effects, double p_target,
                                       double p_ppi, double p_edge) {
  auto t = std::make_unique<Toy>(n_drugs, n_proteins, n_side_effects);
  for (std::size_t d = 0; d < n_drugs; ++d) {
    for (std::size_t p = 0; p < n_proteins; ++p) {
      if (coin(rng, p_target)) t->target(d, p);
    }
  }
  for (std::size_t p = 0; p < n_proteins; ++p) {
    for (std::size_t q = p + 1; q < n_proteins; ++q) {
      if (coin(rng, p_ppi)) t->ppi(p, q);
    }
  }
  for (std::size_t s = 0; s < n_side_effects; ++s) {
    for (std::size_t a = 0; a < n_drugs; ++a) {
      for (std::size_t b = a + 1; b < n_drugs; ++b) {
        if (coin(rng, p_edge)) t->edge(a, s, b);
      }
    }
  }
  return t;
}

// A small model with a random batch, for gradient checks.
struct GradInstance {
  std::unique_ptr<Toy> toy;
  RelationalFeatureSpace space;
  std::unique_ptr<FeatureCache> cache;
  ModelParams params;
  std::vector<TrainingInstance> batch;
  ScoreMode mode = ScoreMode::Combined;
  double l2 = 0.0;
};

inline GradInstance random_grad_instance(Rng& rng, ScoreMode mode) {
  GradInstance gi;
  gi.mode = mode;
  const std::size_t n_drugs = 4 + uniform_index(rng, 5);
  gi.toy = random_toy(rng, n_drugs, 6, 1 + uniform_index(rng, 3), 0.35, 0.4, 0.0);
  Toy& t = *gi.toy;

  std::vector<DrugPair> all_pairs;
  for (std::size_t a = 0; a < n_drugs; ++a) {
    for (std::size_t b = a + 1; b < n_drugs; ++b) all_pairs.push_back(t.pair(a, b));
  }
  RelationalFeatureSpace full = enumerate_templates(t.g, all_pairs, 1);
  std::vector<FeatureTemplate> keep(full.templates().begin(), full.templates().end());
  std::vector<std::size_t> support;
  for (std::uint32_t i = 0; i < full.size(); ++i) support.push_back(full.support(i));
  if (keep.size() > 20) {
    keep.resize(20);
    support.resize(20);
  }
  gi.space = RelationalFeatureSpace(keep, support, 1);
  gi.cache = std::make_unique<FeatureCache>(gi.space, t.g);

  const std::size_t dim = 1 + uniform_index(rng, 8);
  const std::size_t nf = mode == ScoreMode::Combined ? gi.space.size() : 0;
  gi.params = ModelParams(dim, t.drugs, t.side_effects, nf);
  for (double& x : gi.params.entity_table()) x = uniform_real(rng, -1.0, 1.0);
  for (double& x : gi.params.embed_table()) x = uniform_real(rng, -1.0, 1.0);
  for (double& x : gi.params.rel_table()) x = uniform_real(rng, -1.0, 1.0);

  const std::size_t n_pos = 1 + uniform_index(rng, 3);
  for (std::size_t i = 0; i < n_pos; ++i) {
    const RelationId r = t.side_effects[uniform_index(rng, t.side_effects.size())];
    const std::size_t a = uniform_index(rng, n_drugs);
    std::size_t b = uniform_index(rng, n_drugs - 1);
    if (b >= a) ++b;
    TrainingInstance inst;
    inst.positive = canonical(Triple{t.drugs[a], r, t.drugs[b]});
    const std::size_t n_corr = 1 + uniform_index(rng, 5);
    for (std::size_t c = 0; c < n_corr; ++c) {
      std::size_t u = uniform_index(rng, n_drugs);
      while (u == a || u == b) u = uniform_index(rng, n_drugs);
      const bool head = coin(rng, 0.5);
      inst.corruptions.push_back(canonical(
          head ? Triple{t.drugs[u], r, t.drugs[b]} : Triple{t.drugs[a], r, t.drugs[u]}));
    }
    gi.batch.push_back(std::move(inst));
  }
  gi.l2 = coin(rng, 0.5) ? 0.0 : 0.01;
  return gi;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps
// gradients that are zero up to rounding from dividing by ~0.
inline constexpr double kGradStep = 1e-5;
inline constexpr double kGradFloor = 1e-5;

inline GradCheck check_gradients(GradInstance& gi) {
  const FeatureCache* features = gi.mode == ScoreMode::Combined ? gi.cache.get() : nullptr;
  auto loss = [&] {
    return batch_loss_and_grads(gi.params, features, gi.batch, gi.mode, gi.l2).loss;
  };
  const LossAndGrads analytic = batch_loss_and_grads(gi.params, features, gi.batch, gi.mode, gi.l2);
  GradCheck out;
  auto probe = [&](double& theta, double a) {
    const double saved = theta;
    theta = saved + kGradStep;
    const double up = loss();
    theta = saved - kGradStep;
    const double down = loss();
    theta = saved;
    const double n = (up - down) / (2 * kGradStep);
    const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), kGradFloor});
    out.max_rel_error = std::max(out.max_rel_error, err);
    ++out.checked;
  };
  const std::size_t dim = gi.params.dim();
  for (const auto& [row, g] : analytic.grads.entity) {
    for (std::size_t i = 0; i < dim; ++i) probe(gi.params.entity_table()[row * dim + i], g[i]);
  }
  for (const auto& [slot, g] : analytic.grads.embed) {
    for (std::size_t i = 0; i < dim; ++i) probe(gi.params.embed_table()[slot * dim + i], g[i]);
  }
  const std::size_t nf = gi.params.n_features();
  for (const auto& [key, g] : analytic.grads.rel) {
    probe(gi.params.rel_table()[key.first * nf + key.second], g);
  }
  // Relational weights without a reported gradient must not move the loss.
  for (std::size_t slot = 0; slot < gi.params.relations().size(); ++slot) {
    for (std::size_t f = 0; f < nf; ++f) {
      const std::pair<std::int64_t, std::uint32_t> key{static_cast<std::int64_t>(slot),
                                                       static_cast<std::uint32_t>(f)};
      if (!analytic.grads.rel.count(key)) probe(gi.params.rel_table()[slot * nf + f], 0.0);
    }
  }
  return out;
}

}  // namespace fixture

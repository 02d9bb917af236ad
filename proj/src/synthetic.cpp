#include "polyse/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <span>

#include "polyse/error.hpp"
#include "polyse/random.hpp"

namespace polyse {

namespace {

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
  return buf;
}

// `count` distinct values from [lo, hi).
std::vector<std::size_t> distinct_draws(Rng& rng, std::size_t lo, std::size_t hi,
                                        std::size_t count) {
  std::set<std::size_t> picked;
  count = std::min(count, hi - lo);
  while (picked.size() < count) picked.insert(lo + uniform_index(rng, hi - lo));
  return {picked.begin(), picked.end()};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

PlantedRuleDataset make_planted_rule_dataset(const PlantedRuleConfig& cfg) {
  if (cfg.n_hubs < 2 || cfg.n_hubs > cfg.n_proteins || cfg.n_drugs < 3) {
    throw ConfigError("synthetic graph needs >= 2 hubs, hubs <= proteins, >= 3 drugs");
  }
  Rng rng = make_rng(cfg.seed, streams::kSynthetic);
  PlantedRuleDataset out;
  KnowledgeGraph& g = out.graph;

  std::vector<EntityId> drugs;
  std::vector<EntityId> proteins;
  std::vector<EntityId> mono;
  for (std::size_t i = 0; i < cfg.n_drugs; ++i) {
    drugs.push_back(g.intern_entity(numbered("CID", i), EntityKind::Drug));
  }
  for (std::size_t i = 0; i < cfg.n_proteins; ++i) {
    proteins.push_back(g.intern_entity(numbered("GENE", i), EntityKind::Protein));
  }
  for (std::size_t i = 0; i < cfg.n_mono_effects; ++i) {
    mono.push_back(g.intern_entity(numbered("MONO", i), EntityKind::MonoEffect));
  }
  const RelationId has_target = g.intern_relation(kHasTargetKey, RelationKind::HasTarget);
  const RelationId interacts = g.intern_relation(kInteractsWithKey, RelationKind::InteractsWith);
  const RelationId mono_rel = g.intern_relation(kMonoSideEffectKey, RelationKind::MonoSideEffect);

  // Targets.
  std::vector<std::vector<std::size_t>> targets(cfg.n_drugs);
  for (std::size_t d = 0; d < cfg.n_drugs; ++d) {
    targets[d] = distinct_draws(rng, 0, cfg.n_hubs, cfg.hub_targets);
    const std::size_t extra = uniform_index(rng, cfg.extra_targets + 1);
    for (std::size_t p : distinct_draws(rng, cfg.n_hubs, cfg.n_proteins, extra)) {
      targets[d].push_back(p);
    }
    for (std::size_t p : targets[d]) g.add_triple(Triple{drugs[d], has_target, proteins[p]});
  }

  // Interactions: hub-hub edges that rules draw from, then background edges.
  std::vector<std::pair<std::size_t, std::size_t>> hub_edges;
  const std::size_t hub_cap =
      std::min(cfg.hub_interactions, cfg.n_hubs * (cfg.n_hubs - 1) / 2);
  while (hub_edges.size() < hub_cap) {
    const std::size_t p = uniform_index(rng, cfg.n_hubs);
    const std::size_t q = uniform_index(rng, cfg.n_hubs);
    if (p == q || g.contains(Triple{proteins[q], interacts, proteins[p]})) continue;
    if (g.add_triple(Triple{proteins[p], interacts, proteins[q]})) hub_edges.emplace_back(p, q);
  }
  // Background edges avoid the hub block so they cannot create extra rules.
  const std::size_t free_pairs = cfg.n_proteins * (cfg.n_proteins - 1) / 2 -
                                 cfg.n_hubs * (cfg.n_hubs - 1) / 2;
  const std::size_t other_cap = std::min(cfg.other_interactions, free_pairs);
  for (std::size_t added = 0; added < other_cap;) {
    const std::size_t p = uniform_index(rng, cfg.n_proteins);
    const std::size_t q = uniform_index(rng, cfg.n_proteins);
    if (p == q || (p < cfg.n_hubs && q < cfg.n_hubs)) continue;
    if (g.contains(Triple{proteins[q], interacts, proteins[p]})) continue;
    if (g.add_triple(Triple{proteins[p], interacts, proteins[q]})) ++added;
  }

  // Mono side effects, used only by the indicator baseline.
  for (std::size_t d = 0; d < cfg.n_drugs && !mono.empty(); ++d) {
    for (std::size_t m : distinct_draws(rng, 0, mono.size(), cfg.mono_per_drug)) {
      g.add_triple(Triple{drugs[d], mono_rel, mono[m]});
    }
  }

  // Drugs by hub target.
  std::vector<std::vector<std::size_t>> by_protein(cfg.n_proteins);
  for (std::size_t d = 0; d < cfg.n_drugs; ++d) {
    for (std::size_t p : targets[d]) by_protein[p].push_back(d);
  }

  for (std::size_t s = 0; s < cfg.n_side_effects; ++s) {
    const RelationId r =
        g.intern_relation(numbered("SE", s), RelationKind::PolypharmacySideEffect);
    g.set_relation_label(r, "synthetic side effect " + std::to_string(s));
    std::vector<std::pair<EntityId, EntityId>> rules;
    std::size_t rule_pairs = 0;
    for (std::size_t k : distinct_draws(rng, 0, hub_edges.size(), cfg.rules_per_side_effect)) {
      const auto [p, q] = hub_edges[k];
      rules.emplace_back(proteins[p], proteins[q]);
      for (std::size_t a : by_protein[p]) {
        for (std::size_t b : by_protein[q]) {
          if (a != b && g.add_triple(Triple{drugs[a], r, drugs[b]})) ++rule_pairs;
        }
      }
    }
    const auto noise = std::min(
        static_cast<std::size_t>(cfg.noise_fraction * static_cast<double>(rule_pairs)),
        cfg.n_drugs * (cfg.n_drugs - 1) / 2 - rule_pairs);
    for (std::size_t added = 0; added < noise;) {
      const std::size_t a = uniform_index(rng, cfg.n_drugs);
      const std::size_t b = uniform_index(rng, cfg.n_drugs);
      if (a != b && g.add_triple(Triple{drugs[a], r, drugs[b]})) ++added;
    }
    out.rules.push_back(std::move(rules));
  }
  g.freeze();
  return out;
}

void write_dataset_files(const KnowledgeGraph& g, const DatasetPaths& paths) {
  const IngestSchema schema;
  auto header = [](std::ostream& os, std::span<const std::string> cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
  };
  // Names may contain the delimiter.
  auto quoted = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  auto combo = open_out(paths.combo);
  auto targets = open_out(paths.targets);
  auto ppi = open_out(paths.ppi);
  auto mono = open_out(paths.mono);
  header(combo, schema.combo_columns);
  header(targets, schema.target_columns);
  header(ppi, schema.ppi_columns);
  header(mono, schema.mono_columns);
  for (const Triple& t : g.triples()) {
    const std::string& h = g.entity_key(t.head);
    const std::string& tl = g.entity_key(t.tail);
    switch (t.relation.kind) {
      case RelationKind::PolypharmacySideEffect:
        combo << h << ',' << tl << ',' << g.relation_key(t.relation) << ','
              << quoted(g.relation_label(t.relation)) << '\n';
        break;
      case RelationKind::HasTarget: targets << h << ',' << tl << '\n'; break;
      case RelationKind::InteractsWith: ppi << h << ',' << tl << '\n'; break;
      case RelationKind::MonoSideEffect:
        mono << h << ',' << tl << ',' << quoted("mono effect " + tl) << '\n';
        break;
    }
  }
  for (auto* f : {&combo, &targets, &ppi, &mono}) {
    f->flush();
    if (!*f) throw Error("failed writing synthetic dataset");
  }
}

}  // namespace polyse

#include "polyse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "polyse/error.hpp"
#include "polyse/random.hpp"

namespace polyse {

namespace {

std::uint64_t example_key(const Example& e) {
  return (std::uint64_t{e.side_effect.index} << 48) |
         (std::uint64_t{e.drug_a.index} << 24) | e.drug_b.index;
}

std::string format_fraction(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", f);
  return buf;
}

// Draws `count` distinct pairs over `drugs` that are not edges of r.
std::vector<Example> negatives_for(const KnowledgeGraph& g,
                                   std::span<const EntityId> drugs,
                                   RelationId r, std::size_t count, Rng& rng) {
  const std::size_t n = drugs.size();
  const std::size_t total_pairs = n < 2 ? 0 : n * (n - 1) / 2;
  const std::size_t positives = g.triple_count(r);
  if (positives > total_pairs || count > total_pairs - positives) {
    throw Exhausted("side effect '" + g.relation_key(r) + "' has " +
                    std::to_string(positives) + " positives but only " +
                    std::to_string(total_pairs - std::min(positives, total_pairs)) +
                    " absent drug pairs");
  }
  std::vector<Example> out;
  out.reserve(count);
  const std::size_t available = total_pairs - positives;

  if (count * 3 <= available) {
    // Sparse case: rejection sampling over unordered pairs.
    std::unordered_set<std::uint64_t> taken;
    while (out.size() < count) {
      const std::size_t i = uniform_index(rng, n);
      std::size_t j = uniform_index(rng, n - 1);
      if (j >= i) ++j;
      const DrugPair p = DrugPair::canonical(drugs[i], drugs[j]);
      if (g.contains(Triple{p.first, r, p.second})) continue;
      if (!taken.insert(p.key()).second) continue;
      out.push_back(Example{p.first, p.second, r, Label::Negative});
    }
    return out;
  }

  // Dense case: enumerate the complement and take a uniform subset.
  std::vector<DrugPair> pool;
  pool.reserve(available);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const DrugPair p = DrugPair::canonical(drugs[i], drugs[j]);
      if (!g.contains(Triple{p.first, r, p.second})) pool.push_back(p);
    }
  }
  for (std::size_t k = 0; k < count; ++k) {
    std::swap(pool[k], pool[k + uniform_index(rng, pool.size() - k)]);
    out.push_back(Example{pool[k].first, pool[k].second, r, Label::Negative});
  }
  return out;
}

}  // namespace

Example make_example(EntityId a, EntityId b, RelationId r, Label label) {
  const DrugPair p = DrugPair::canonical(a, b);
  return Example{p.first, p.second, r, label};
}

void SplitSpec::validate() const {
  for (double f : {train, valid, test}) {
    if (!(f > 0.0 && f < 1.0)) {
      throw ConfigError("split fractions must each lie in (0,1)");
    }
  }
  if (std::abs(train + valid + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::Full: return "full";
    case Regime::DrugDrugOnly: return "drug_drug_only";
    case Regime::TargetedDrugsOnly: return "targeted_drugs_only";
  }
  return "?";
}

Regime parse_regime(const std::string& name) {
  for (Regime r : {Regime::Full, Regime::DrugDrugOnly, Regime::TargetedDrugsOnly}) {
    if (name == to_string(r)) return r;
  }
  throw ConfigError("unknown regime '" + name + "'");
}

std::vector<EntityId> polypharmacy_drugs(const KnowledgeGraph& g) {
  std::vector<bool> seen(g.entity_count(), false);
  for (const Triple& t : g.triples()) {
    if (t.relation.kind != RelationKind::PolypharmacySideEffect) continue;
    seen[t.head.index] = true;
    seen[t.tail.index] = true;
  }
  std::vector<EntityId> out;
  for (std::uint32_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(g.entity(i));
  }
  return out;
}

std::vector<Example> positive_examples(const KnowledgeGraph& g) {
  std::vector<Example> out;
  for (const Triple& t : g.triples()) {
    if (t.relation.kind == RelationKind::PolypharmacySideEffect) {
      out.push_back(Example{t.head, t.tail, t.relation, Label::Positive});
    }
  }
  return out;
}

std::vector<Example> sample_negatives(const KnowledgeGraph& g,
                                      std::uint64_t seed) {
  const std::vector<EntityId> drugs = polypharmacy_drugs(g);
  std::vector<Example> out;
  for (const RelationId r : g.relations_of(RelationKind::PolypharmacySideEffect)) {
    const std::size_t count = g.triple_count(r);
    if (count == 0) continue;
    Rng rng = make_rng(seed, streams::kNegatives, r.index);
    auto part = negatives_for(g, drugs, r, count, rng);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Splits stratified_split(std::span<const Example> examples, const SplitSpec& spec) {
  spec.validate();
  // Stratum key: (side effect, label). std::map gives a fixed visiting order.
  std::map<std::uint64_t, std::vector<Example>> strata;
  for (const Example& e : examples) {
    const std::uint64_t key =
        (std::uint64_t{e.side_effect.index} << 1) | static_cast<std::uint64_t>(e.label);
    strata[key].push_back(e);
  }
  Splits out;
  for (auto& [key, members] : strata) {
    Rng rng = make_rng(spec.seed, streams::kSplit, key);
    shuffle(std::span<Example>(members), rng);
    const std::size_t n = members.size();
    // Guard against representation error such as 0.1 * 30 < 3.
    const auto n_valid = static_cast<std::size_t>(std::floor(n * spec.valid + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * spec.test + 1e-9));
    const std::size_t n_train = n - n_valid - n_test;
    auto it = members.begin();
    out.train.insert(out.train.end(), it, it + n_train);
    it += n_train;
    out.valid.insert(out.valid.end(), it, it + n_valid);
    it += n_valid;
    out.test.insert(out.test.end(), it, it + n_test);
  }
  return out;
}

Splits build_splits(const KnowledgeGraph& g, const SplitSpec& spec) {
  std::vector<Example> all = positive_examples(g);
  const auto negatives = sample_negatives(g, spec.seed);
  all.insert(all.end(), negatives.begin(), negatives.end());
  return stratified_split(all, spec);
}

KnowledgeGraph training_graph(const KnowledgeGraph& g, const Splits& splits) {
  std::unordered_set<std::uint64_t> train_pos;
  for (const Example& e : splits.train) {
    if (e.positive()) train_pos.insert(example_key(e));
  }
  return g.filtered([&](const Triple& t) {
    if (t.relation.kind != RelationKind::PolypharmacySideEffect) return true;
    return train_pos.count(example_key(Example{t.head, t.tail, t.relation,
                                               Label::Positive})) > 0;
  });
}

RegimeView apply_regime(const KnowledgeGraph& g, const Splits& splits,
                        Regime regime) {
  switch (regime) {
    case Regime::Full:
      return RegimeView{g.filtered([](const Triple&) { return true; }), splits};
    case Regime::DrugDrugOnly:
      return RegimeView{g.filtered([](const Triple& t) {
                          return t.relation.kind != RelationKind::HasTarget &&
                                 t.relation.kind != RelationKind::InteractsWith;
                        }),
                        splits};
    case Regime::TargetedDrugsOnly: {
      std::vector<bool> removed(g.entity_count(), false);
      const auto has_target = g.singleton_relation(RelationKind::HasTarget);
      for (const EntityId d : g.entities_of(EntityKind::Drug)) {
        removed[d.index] = !has_target || g.neighbors(d, *has_target).empty();
      }
      auto drop = [&](EntityId e) { return e.kind == EntityKind::Drug && removed[e.index]; };
      RegimeView view{g.filtered([&](const Triple& t) {
                        return !drop(t.head) && !drop(t.tail);
                      }),
                      {}};
      auto keep = [&](const std::vector<Example>& in, std::vector<Example>& out) {
        for (const Example& e : in) {
          if (!drop(e.drug_a) && !drop(e.drug_b)) out.push_back(e);
        }
      };
      keep(splits.train, view.splits.train);
      keep(splits.valid, view.splits.valid);
      keep(splits.test, view.splits.test);
      return view;
    }
  }
  throw std::logic_error("unhandled regime");
}

void write_splits(std::ostream& os, const KnowledgeGraph& g, const Splits& s,
                  const SplitManifest& manifest) {
  os << "# polyse-splits v1 dataset_hash=" << hex64(manifest.dataset_hash)
     << " seed=" << manifest.spec.seed
     << " fractions=" << format_fraction(manifest.spec.train) << ','
     << format_fraction(manifest.spec.valid) << ','
     << format_fraction(manifest.spec.test) << '\n';
  auto rows = [&](const std::vector<Example>& examples, const char* split) {
    for (const Example& e : examples) {
      os << g.entity_key(e.drug_a) << '\t' << g.entity_key(e.drug_b) << '\t'
         << g.relation_key(e.side_effect) << '\t'
         << (e.positive() ? "pos" : "neg") << '\t' << split << '\n';
    }
  };
  rows(s.train, "train");
  rows(s.valid, "valid");
  rows(s.test, "test");
}

void write_splits(const std::filesystem::path& path, const KnowledgeGraph& g,
                  const Splits& s, const SplitManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_splits(out, g, s, manifest);
  if (!out) throw Error("write failed for " + path.string());
}

Splits read_splits(const std::filesystem::path& path, const KnowledgeGraph& g,
                   SplitManifest* manifest) {
  std::ifstream in(path, std::ios::binary);
  const std::string file = path.string();
  if (!in) throw ParseError(file, 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# polyse-splits v1 ", 0) != 0) {
    throw ParseError(file, 1, "missing split manifest header");
  }
  SplitManifest m;
  {
    std::istringstream header(line.substr(19));
    std::string field;
    while (header >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw ParseError(file, 1, "bad header field");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "dataset_hash") {
        m.dataset_hash = std::stoull(value, nullptr, 16);
      } else if (key == "seed") {
        m.spec.seed = std::stoull(value);
      } else if (key == "fractions") {
        if (std::sscanf(value.c_str(), "%lf,%lf,%lf", &m.spec.train,
                        &m.spec.valid, &m.spec.test) != 3) {
          throw ParseError(file, 1, "bad fractions");
        }
      }
    }
  }
  if (manifest) *manifest = m;

  Splits s;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, '\t')) f.push_back(cell);
    if (f.size() != 5) throw ParseError(file, line_no, "expected 5 fields");
    const auto a = g.find_entity(f[0]);
    const auto b = g.find_entity(f[1]);
    const auto r = g.find_relation(f[2]);
    if (!a || !b || a->kind != EntityKind::Drug || b->kind != EntityKind::Drug) {
      throw ParseError(file, line_no, "unknown drug");
    }
    if (!r || r->kind != RelationKind::PolypharmacySideEffect) {
      throw ParseError(file, line_no, "unknown side effect '" + f[2] + "'");
    }
    Label label;
    if (f[3] == "pos") {
      label = Label::Positive;
    } else if (f[3] == "neg") {
      label = Label::Negative;
    } else {
      throw ParseError(file, line_no, "bad label '" + f[3] + "'");
    }
    const Example e = make_example(*a, *b, *r, label);
    if (f[4] == "train") {
      s.train.push_back(e);
    } else if (f[4] == "valid") {
      s.valid.push_back(e);
    } else if (f[4] == "test") {
      s.test.push_back(e);
    } else {
      throw ParseError(file, line_no, "bad split '" + f[4] + "'");
    }
  }
  return s;
}

}  // namespace polyse

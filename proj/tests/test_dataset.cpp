#include <doctest.h>

#include <map>
#include <set>
#include <tuple>

#include "fixtures.hpp"
#include "polyse/dataset.hpp"
#include "polyse/error.hpp"
#include "tempdir.hpp"

using namespace polyse;

namespace {

using ExampleKey = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, int>;

ExampleKey key_of(const Example& e) {
  return {e.side_effect.index, e.drug_a.index, e.drug_b.index, static_cast<int>(e.label)};
}

std::multiset<ExampleKey> keys(const std::vector<Example>& xs) {
  std::multiset<ExampleKey> out;
  for (const Example& e : xs) out.insert(key_of(e));
  return out;
}

}  // namespace

TEST_CASE("four drugs, two positives: negatives come from the absent pairs") {
  fixture::Toy t(4, 0, 1);
  t.edge(0, 0, 1);
  t.edge(2, 0, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto neg = sample_negatives(t.g, seed);
    REQUIRE(neg.size() == 2);
    CHECK(neg[0].pair() != neg[1].pair());
    for (const Example& e : neg) {
      CHECK_FALSE(e.positive());
      CHECK(e.drug_a < e.drug_b);
      CHECK_FALSE(t.g.contains(e.triple()));
    }
  }
  CHECK(sample_negatives(t.g, 5) == sample_negatives(t.g, 5));
}

TEST_CASE("three drugs, two positives: not enough absent pairs") {
  fixture::Toy t(3, 0, 1);
  t.edge(0, 0, 1);
  t.edge(1, 0, 2);
  CHECK_THROWS_AS(sample_negatives(t.g, 1), Exhausted);
}

TEST_CASE("negatives balance positives per side effect") {
  Rng rng = make_rng(3, 0);
  auto t = fixture::random_toy(rng, 20, 0, 5, 0, 0, 0.15);
  const auto neg = sample_negatives(t->g, 9);
  std::map<std::uint32_t, std::size_t> per_se;
  std::set<ExampleKey> seen;
  for (const Example& e : neg) {
    ++per_se[e.side_effect.index];
    CHECK(seen.insert(key_of(e)).second);
    CHECK_FALSE(t->g.contains(e.triple()));
  }
  for (RelationId r : t->side_effects) CHECK(per_se[r.index] == t->g.triple_count(r));
}

TEST_CASE("stratified split: ten positives give 8/1/1") {
  fixture::Toy t(10, 0, 1);
  std::vector<Example> xs;
  for (std::size_t i = 0; i + 1 < 10; ++i) xs.push_back(make_example(t.drugs[i], t.drugs[i + 1], t.side_effects[0], Label::Positive));
  xs.push_back(make_example(t.drugs[0], t.drugs[9], t.side_effects[0], Label::Positive));
  const Splits s = stratified_split(xs, SplitSpec{});
  CHECK(s.train.size() == 8);
  CHECK(s.valid.size() == 1);
  CHECK(s.test.size() == 1);
}

TEST_CASE("stratified split: a stratum of one goes to train") {
  fixture::Toy t(2, 0, 1);
  const std::vector<Example> xs{
      make_example(t.drugs[1], t.drugs[0], t.side_effects[0], Label::Positive)};
  const Splits s = stratified_split(xs, SplitSpec{});
  CHECK(s.train.size() == 1);
  CHECK(s.valid.empty());
  CHECK(s.test.empty());
  CHECK(s.train[0].drug_a == t.drugs[0]);
}

TEST_CASE("stratified split matches a counting oracle") {
  Rng rng = make_rng(21, 0);
  fixture::Toy t(60, 0, 7);
  std::vector<Example> xs;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t a = uniform_index(rng, 60);
    std::size_t b = uniform_index(rng, 59);
    if (b >= a) ++b;
    xs.push_back(make_example(t.drugs[a], t.drugs[b], t.side_effects[uniform_index(rng, 7)],
                              fixture::coin(rng, 0.5) ? Label::Positive : Label::Negative));
  }
  SplitSpec spec{0.7, 0.2, 0.1, 4};
  const Splits s = stratified_split(xs, spec);

  std::map<std::pair<std::uint32_t, int>, std::size_t> n;
  for (const Example& e : xs) ++n[{e.side_effect.index, static_cast<int>(e.label)}];
  auto count = [](const std::vector<Example>& part) {
    std::map<std::pair<std::uint32_t, int>, std::size_t> c;
    for (const Example& e : part) ++c[{e.side_effect.index, static_cast<int>(e.label)}];
    return c;
  };
  auto tr = count(s.train), va = count(s.valid), te = count(s.test);
  for (const auto& [stratum, size] : n) {
    // Integer arithmetic: floor(size * 2 / 10) and floor(size / 10).
    const std::size_t want_valid = size * 2 / 10;
    const std::size_t want_test = size / 10;
    CHECK(va[stratum] == want_valid);
    CHECK(te[stratum] == want_test);
    CHECK(tr[stratum] == size - want_valid - want_test);
  }
  std::multiset<ExampleKey> all = keys(s.train);
  for (const auto& k : keys(s.valid)) all.insert(k);
  for (const auto& k : keys(s.test)) all.insert(k);
  CHECK(all == keys(xs));
  CHECK(stratified_split(xs, spec) == s);
  spec.seed = 5;
  CHECK_FALSE(stratified_split(xs, spec) == s);
}

TEST_CASE("split fractions are validated") {
  CHECK_THROWS_AS(SplitSpec({0.8, 0.1, 0.2, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(SplitSpec({1.0, 0.0, 0.0, 1}).validate(), ConfigError);
  CHECK_NOTHROW(SplitSpec{}.validate());
}

TEST_CASE("built splits are disjoint and negatives never collide with positives") {
  Rng rng = make_rng(8, 0);
  auto t = fixture::random_toy(rng, 25, 10, 4, 0.2, 0.2, 0.12);
  const Splits s = build_splits(t->g, SplitSpec{});
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> triples;
  std::size_t total = 0;
  for (const auto* part : {&s.train, &s.valid, &s.test}) {
    for (const Example& e : *part) {
      ++total;
      triples.insert({e.side_effect.index, e.drug_a.index, e.drug_b.index});
      CHECK(t->g.contains(e.triple()) == e.positive());
    }
  }
  CHECK(triples.size() == total);
  CHECK(total == 2 * positive_examples(t->g).size());
}

TEST_CASE("regimes") {
  // Drugs A, B, C; C has no targets.
  fixture::Toy t(3, 2, 1);
  t.target(0, 0);
  t.target(1, 1);
  t.ppi(0, 1);
  t.edge(0, 0, 1);
  t.edge(0, 0, 2);
  t.edge(1, 0, 2);
  const RelationId mono = t.g.intern_relation(kMonoSideEffectKey, RelationKind::MonoSideEffect);
  const EntityId m = t.g.intern_entity("M0", EntityKind::MonoEffect);
  t.g.add_triple({t.drugs[2], mono, m});
  t.g.freeze();
  Splits s;
  s.train = {make_example(t.drugs[0], t.drugs[1], t.side_effects[0], Label::Positive),
             make_example(t.drugs[0], t.drugs[2], t.side_effects[0], Label::Positive)};
  s.test = {make_example(t.drugs[1], t.drugs[2], t.side_effects[0], Label::Positive)};

  SUBCASE("full is the identity") {
    const RegimeView v = apply_regime(t.g, s, Regime::Full);
    CHECK(v.splits == s);
    CHECK(graph_hash(v.graph) == graph_hash(t.g));
  }
  SUBCASE("drug-drug only keeps polypharmacy and mono triples") {
    const RegimeView v = apply_regime(t.g, s, Regime::DrugDrugOnly);
    CHECK(v.splits == s);
    for (const Triple& x : v.graph.triples()) {
      CHECK((x.relation.kind == RelationKind::PolypharmacySideEffect ||
             x.relation.kind == RelationKind::MonoSideEffect));
    }
    CHECK(v.graph.triple_count() == 4);
  }
  SUBCASE("targeted drugs only removes drug C everywhere") {
    const RegimeView v = apply_regime(t.g, s, Regime::TargetedDrugsOnly);
    REQUIRE(v.splits.train.size() == 1);
    CHECK(v.splits.train[0].drug_b == t.drugs[1]);
    CHECK(v.splits.test.empty());
    for (const Triple& x : v.graph.triples()) {
      CHECK(x.head != t.drugs[2]);
      CHECK(x.tail != t.drugs[2]);
    }
    CHECK(v.graph.triple_count(t.side_effects[0]) == 1);
    CHECK(v.graph.triple_count(t.has_target) == 2);
  }
}

TEST_CASE("training graph holds only training positives") {
  fixture::Toy t(4, 0, 1);
  t.edge(0, 0, 1);
  t.edge(2, 0, 3);
  Splits s;
  s.train = {make_example(t.drugs[0], t.drugs[1], t.side_effects[0], Label::Positive)};
  s.test = {make_example(t.drugs[2], t.drugs[3], t.side_effects[0], Label::Positive)};
  const KnowledgeGraph tg = training_graph(t.g, s);
  CHECK(tg.contains({t.drugs[0], t.side_effects[0], t.drugs[1]}));
  CHECK_FALSE(tg.contains({t.drugs[2], t.side_effects[0], t.drugs[3]}));
}

TEST_CASE("split file round-trips") {
  Rng rng = make_rng(2, 0);
  auto t = fixture::random_toy(rng, 15, 4, 3, 0.3, 0.3, 0.15);
  const SplitSpec spec{0.8, 0.1, 0.1, 99};
  const Splits s = build_splits(t->g, spec);
  TempDir dir;
  write_splits(dir / "splits.tsv", t->g, s, SplitManifest{graph_hash(t->g), spec});
  SplitManifest m;
  const Splits back = read_splits(dir / "splits.tsv", t->g, &m);
  CHECK(back == s);
  CHECK(m.dataset_hash == graph_hash(t->g));
  CHECK(m.spec.seed == 99);
  CHECK(m.spec.train == 0.8);
  CHECK_THROWS_AS(read_splits(dir.write("bad.tsv", "# polyse-splits v1 seed=1\nD0\tD1\tS0\tmaybe\ttrain\n"), t->g),
                  ParseError);
}

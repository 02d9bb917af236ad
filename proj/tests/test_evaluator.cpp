#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polyse/error.hpp"
#include "polyse/evaluator.hpp"

using namespace polyse;

namespace {

ScoredExample scored(bool positive, double score, std::uint32_t se = 0) {
  Example e{EntityId{0}, EntityId{1}, RelationId{se}, positive ? Label::Positive : Label::Negative};
  return {e, score};
}

std::vector<ScoredExample> random_instance(Rng& rng, std::size_t n, bool coarse) {
  std::vector<ScoredExample> xs;
  for (std::size_t i = 0; i < n; ++i) {
    // Coarse scores produce many ties.
    const double s = coarse ? static_cast<double>(uniform_index(rng, 5)) : uniform_real(rng, -3, 3);
    xs.push_back(scored(fixture::coin(rng, 0.4), s));
  }
  xs[0].example.label = Label::Positive;
  xs[1].example.label = Label::Negative;
  return xs;
}

}  // namespace

TEST_CASE("auroc basics") {
  const std::vector<ScoredExample> sep{scored(true, 3), scored(true, 2), scored(false, 1), scored(false, 0)};
  CHECK(auroc(sep) == 1.0);
  const std::vector<ScoredExample> flat{scored(true, 1), scored(false, 1), scored(true, 1), scored(false, 1)};
  CHECK(auroc(flat) == 0.5);
  const std::vector<ScoredExample> one_class{scored(true, 1), scored(true, 2)};
  CHECK_THROWS_AS(auroc(one_class), Degenerate);
}

TEST_CASE("aupr basics") {
  const std::vector<ScoredExample> sep{scored(true, 3), scored(true, 2), scored(false, 1), scored(false, 0)};
  CHECK(aupr(sep) == 1.0);
  std::vector<ScoredExample> last;
  for (int i = 0; i < 9; ++i) last.push_back(scored(false, 10 - i));
  last.push_back(scored(true, 0));
  CHECK(aupr(last) == doctest::Approx(0.1).epsilon(1e-15));
  const std::vector<ScoredExample> none{scored(false, 1)};
  CHECK_THROWS_AS(aupr(none), Degenerate);
  CHECK_THROWS_AS(ap_at_k(none, 50), Degenerate);
}

TEST_CASE("ap_at_k basics") {
  std::vector<ScoredExample> top;
  for (int i = 0; i < 60; ++i) top.push_back(scored(true, 100 - i));
  for (int i = 0; i < 40; ++i) top.push_back(scored(false, -i));
  CHECK(ap_at_k(top, 50) == 1.0);
  std::vector<ScoredExample> bottom;
  for (int i = 0; i < 50; ++i) bottom.push_back(scored(false, 100 - i));
  for (int i = 0; i < 5; ++i) bottom.push_back(scored(true, -i));
  CHECK(ap_at_k(bottom, 50) == 0.0);
}

TEST_CASE("ties keep insertion order") {
  const std::vector<ScoredExample> a{scored(true, 1), scored(false, 1)};
  const std::vector<ScoredExample> b{scored(false, 1), scored(true, 1)};
  CHECK(aupr(a) == 1.0);
  CHECK(aupr(b) == 0.5);
  CHECK(auroc(a) == 0.5);
  CHECK(auroc(b) == 0.5);
  CHECK(tie_fraction(a) == 1.0);
}

TEST_CASE("metrics agree with the quadratic oracles") {
  Rng rng = make_rng(10, 0);
  for (int i = 0; i < 200; ++i) {
    const auto xs = random_instance(rng, 2 + uniform_index(rng, 199), i % 3 == 0);
    CHECK(std::abs(auroc(xs) - oracle::auroc(xs)) <= 1e-9);
    CHECK(std::abs(aupr(xs) - oracle::aupr(xs)) <= 1e-9);
    CHECK(std::abs(ap_at_k(xs, 50) - oracle::ap_at_k(xs, 50)) <= 1e-9);
  }
  const auto big = random_instance(rng, 500, false);
  CHECK(std::abs(ap_at_k(big, 50) - oracle::ap_at_k(big, 50)) <= 1e-9);
}

TEST_CASE("metrics are invariant under increasing transforms") {
  Rng rng = make_rng(11, 0);
  for (int i = 0; i < 50; ++i) {
    auto xs = random_instance(rng, 100, i % 2 == 0);
    auto ys = xs;
    for (auto& y : ys) y.score = std::exp(0.5 * y.score) + 3;
    CHECK(auroc(ys) == auroc(xs));
    CHECK(aupr(ys) == aupr(xs));
    CHECK(ap_at_k(ys, 50) == ap_at_k(xs, 50));
  }
}

TEST_CASE("negated scores flip auroc when there are no ties") {
  Rng rng = make_rng(12, 0);
  for (int i = 0; i < 50; ++i) {
    auto xs = random_instance(rng, 80, false);
    auto neg = xs;
    for (auto& x : neg) x.score = -x.score;
    CHECK(auroc(neg) == doctest::Approx(1 - auroc(xs)).epsilon(1e-12));
  }
}

TEST_CASE("evaluate groups by side effect and averages") {
  fixture::Toy t(6, 0, 3);
  std::vector<Example> xs;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t a = 0; a < 6; ++a) {
      for (std::size_t b = a + 1; b < 6; ++b) {
        xs.push_back(make_example(t.drugs[a], t.drugs[b], t.side_effects[s],
                                  (a + b + s) % 3 == 0 ? Label::Positive : Label::Negative));
      }
    }
  }
  SUBCASE("label scorer is perfect") {
    const EvalReport r = evaluate([](const Example& e) { return e.positive() ? 1.0 : 0.0; }, xs);
    CHECK(r.n_aggregated == 3);
    CHECK(r.aggregate.auroc == 1.0);
    CHECK(r.aggregate.aupr == 1.0);
    CHECK(r.aggregate.ap50 == 1.0);
  }
  SUBCASE("constant scorer") {
    const EvalReport r = evaluate([](const Example&) { return 0.25; }, xs);
    for (const auto& se : r.per_side_effect) CHECK(se.metrics.auroc == 0.5);
    REQUIRE(r.pooled);
    CHECK(r.pooled->auroc == 0.5);
  }
  SUBCASE("per side effect values equal the oracles composed by hand") {
    auto score = [&](const Example& e) {
      return std::sin(e.drug_a.index * 1.7 + e.drug_b.index * 0.3 + e.side_effect.index);
    };
    const EvalReport r = evaluate(score, xs, 2);
    REQUIRE(r.per_side_effect.size() == 3);
    double sum = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      std::vector<ScoredExample> group;
      for (const Example& e : xs) {
        if (e.side_effect == t.side_effects[s]) group.push_back({e, score(e)});
      }
      const auto& m = r.per_side_effect[s];
      CHECK(m.side_effect == t.side_effects[s]);
      CHECK(std::abs(m.metrics.auroc - oracle::auroc(group)) <= 1e-12);
      CHECK(std::abs(m.metrics.aupr - oracle::aupr(group)) <= 1e-12);
      CHECK(std::abs(m.metrics.ap50 - oracle::ap_at_k(group, 50)) <= 1e-12);
      sum += m.metrics.aupr;
    }
    CHECK(r.aggregate.aupr == doctest::Approx(sum / 3).epsilon(1e-15));
    CHECK(evaluate(score, xs, 1).aggregate.aupr == r.aggregate.aupr);
  }
  SUBCASE("degenerate side effects are excluded") {
    std::vector<Example> ys = xs;
    ys.push_back(make_example(t.drugs[0], t.drugs[1], t.g.intern_relation("S9", RelationKind::PolypharmacySideEffect),
                              Label::Positive));
    const EvalReport r = evaluate([](const Example& e) { return e.positive() ? 1.0 : 0.0; }, ys);
    CHECK(r.per_side_effect.size() == 4);
    CHECK(r.per_side_effect.back().degenerate);
    CHECK(r.n_aggregated == 3);
    std::ostringstream os;
    write_report(os, r, t.g);
    CHECK(os.str().find("S9") != std::string::npos);
  }
  SUBCASE("non-finite scores are rejected") {
    CHECK_THROWS_AS(evaluate([](const Example&) { return std::nan(""); }, xs), NonFinite);
  }
}

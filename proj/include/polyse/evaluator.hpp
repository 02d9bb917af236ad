#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyse/dataset.hpp"
#include "polyse/graph.hpp"

namespace polyse {

struct ScoredExample {
  Example example;
  double score = 0.0;
};

// Probability that a random positive outranks a random negative, ties
// counted as one half (rank-sum form). Throws Degenerate if a class is
// missing.
double auroc(std::span<const ScoredExample> scored);

// Average precision: mean over positives of the precision at each
// positive's rank. Descending score; ties keep input order.
double aupr(std::span<const ScoredExample> scored);

// Average precision restricted to the top k:
// sum of precision@i over positives with i <= k, divided by min(k, n_pos).
double ap_at_k(std::span<const ScoredExample> scored, std::size_t k = 50);

// Fraction of examples whose score equals some other example's score.
double tie_fraction(std::span<const ScoredExample> scored);

inline constexpr double kTieHeavyFraction = 0.05;

struct Metrics {
  double auroc = 0.0;
  double aupr = 0.0;
  double ap50 = 0.0;
};

struct SideEffectMetrics {
  RelationId side_effect;
  Metrics metrics;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double tie_fraction = 0.0;
  bool degenerate = false;  // excluded from the aggregate
};

struct EvalReport {
  std::string label;
  std::vector<SideEffectMetrics> per_side_effect;  // side-effect id order
  // Unweighted mean over non-degenerate side effects.
  Metrics aggregate;
  std::size_t n_aggregated = 0;
  // All examples ranked together, when both classes are present.
  std::optional<Metrics> pooled;
};

using ExampleScorer = std::function<double(const Example&)>;

// Scores the examples (in parallel when threads > 1), groups them by side
// effect and computes the three metrics per group. Throws NonFinite if a
// score is not finite.
EvalReport evaluate(const ExampleScorer& scorer, std::span<const Example> examples,
                    std::size_t threads = 1, std::string label = {});

// Same, with precomputed scores aligned to examples.
EvalReport evaluate_scores(std::span<const Example> examples,
                           std::span<const double> scores, std::string label = {});

// `relation auroc aupr ap50 n_pos n_neg` per side effect, then aggregate and
// pooled lines.
void write_report(std::ostream& os, const EvalReport& report, const KnowledgeGraph& g);

// {"auroc":..,"aupr":..,"ap50":..,...} for scripting.
void write_summary_json(std::ostream& os, const EvalReport& report);

}  // namespace polyse

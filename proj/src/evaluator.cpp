#include "polyse/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "polyse/error.hpp"
#include "polyse/parallel.hpp"

namespace polyse {

namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts count_labels(std::span<const ScoredExample> scored) {
  Counts c;
  for (const auto& s : scored) (s.example.positive() ? c.pos : c.neg)++;
  return c;
}

// Indices by descending score, ties in input order.
std::vector<std::size_t> ranking(std::span<const ScoredExample> scored) {
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score > scored[b].score;
  });
  return order;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

Metrics all_metrics(std::span<const ScoredExample> scored) {
  return Metrics{auroc(scored), aupr(scored), ap_at_k(scored, 50)};
}

}  // namespace

double auroc(std::span<const ScoredExample> scored) {
  const Counts c = count_labels(scored);
  if (c.pos == 0 || c.neg == 0) throw Degenerate("auroc needs both classes");
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scored[a].score < scored[b].score; });
  // Sum of 1-based average ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scored[order[j]].score == scored[order[i]].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (scored[order[k]].example.positive()) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(c.pos);
  const double nn = static_cast<double>(c.neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double aupr(std::span<const ScoredExample> scored) {
  const Counts c = count_labels(scored);
  if (c.pos == 0) throw Degenerate("aupr needs a positive");
  double total = 0.0;
  std::size_t hits = 0;
  const auto order = ranking(scored);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!scored[order[i]].example.positive()) continue;
    ++hits;
    total += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return total / static_cast<double>(c.pos);
}

double ap_at_k(std::span<const ScoredExample> scored, std::size_t k) {
  if (scored.empty()) throw Degenerate("ap_at_k on empty list");
  const Counts c = count_labels(scored);
  if (c.pos == 0) throw Degenerate("ap_at_k needs a positive");
  if (k == 0) throw std::invalid_argument("k must be positive");
  const auto order = ranking(scored);
  double total = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    if (!scored[order[i]].example.positive()) continue;
    ++hits;
    total += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return total / static_cast<double>(std::min(k, c.pos));
}

double tie_fraction(std::span<const ScoredExample> scored) {
  if (scored.empty()) return 0.0;
  std::vector<double> s;
  s.reserve(scored.size());
  for (const auto& x : scored) s.push_back(x.score);
  std::sort(s.begin(), s.end());
  std::size_t tied = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    if (j - i > 1) tied += j - i;
    i = j;
  }
  return static_cast<double>(tied) / static_cast<double>(s.size());
}

EvalReport evaluate_scores(std::span<const Example> examples,
                           std::span<const double> scores, std::string label) {
  if (examples.size() != scores.size()) {
    throw std::invalid_argument("scores not aligned with examples");
  }
  std::map<std::uint32_t, std::vector<ScoredExample>> groups;
  std::vector<ScoredExample> all;
  all.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NonFinite("non-finite score during evaluation");
    const ScoredExample s{examples[i], scores[i]};
    groups[examples[i].side_effect.index].push_back(s);
    all.push_back(s);
  }

  EvalReport report;
  report.label = std::move(label);
  Metrics sum;
  for (const auto& [index, members] : groups) {
    SideEffectMetrics m;
    m.side_effect = members.front().example.side_effect;
    const Counts c = count_labels(members);
    m.n_pos = c.pos;
    m.n_neg = c.neg;
    m.tie_fraction = tie_fraction(members);
    if (c.pos == 0 || c.neg == 0) {
      m.degenerate = true;
    } else {
      m.metrics = all_metrics(members);
      sum.auroc += m.metrics.auroc;
      sum.aupr += m.metrics.aupr;
      sum.ap50 += m.metrics.ap50;
      ++report.n_aggregated;
    }
    report.per_side_effect.push_back(m);
  }
  if (report.n_aggregated > 0) {
    const double n = static_cast<double>(report.n_aggregated);
    report.aggregate = Metrics{sum.auroc / n, sum.aupr / n, sum.ap50 / n};
  }
  const Counts c = count_labels(all);
  if (c.pos > 0 && c.neg > 0) report.pooled = all_metrics(all);
  return report;
}

EvalReport evaluate(const ExampleScorer& scorer, std::span<const Example> examples,
                    std::size_t threads, std::string label) {
  std::vector<double> scores(examples.size());
  parallel_chunks(examples.size(), threads,
                  [&](std::size_t begin, std::size_t end, std::size_t) {
                    for (std::size_t i = begin; i < end; ++i) scores[i] = scorer(examples[i]);
                  });
  return evaluate_scores(examples, scores, std::move(label));
}

void write_report(std::ostream& os, const EvalReport& report, const KnowledgeGraph& g) {
  if (!report.label.empty()) os << "# " << report.label << '\n';
  os << "# relation auroc aupr ap50 n_pos n_neg\n";
  std::vector<std::string> tie_heavy;
  for (const SideEffectMetrics& m : report.per_side_effect) {
    const std::string& key = g.relation_key(m.side_effect);
    if (m.degenerate) {
      os << key << " nan nan nan " << m.n_pos << ' ' << m.n_neg << '\n';
    } else {
      os << key << ' ' << fixed(m.metrics.auroc) << ' ' << fixed(m.metrics.aupr) << ' '
         << fixed(m.metrics.ap50) << ' ' << m.n_pos << ' ' << m.n_neg << '\n';
    }
    if (m.tie_fraction > kTieHeavyFraction) tie_heavy.push_back(key);
  }
  os << "aggregate " << fixed(report.aggregate.auroc) << ' ' << fixed(report.aggregate.aupr)
     << ' ' << fixed(report.aggregate.ap50) << ' ' << report.n_aggregated << '\n';
  if (report.pooled) {
    os << "pooled " << fixed(report.pooled->auroc) << ' ' << fixed(report.pooled->aupr) << ' '
       << fixed(report.pooled->ap50) << '\n';
  }
  if (!tie_heavy.empty()) {
    os << "# tie-heavy:";
    for (const auto& k : tie_heavy) os << ' ' << k;
    os << '\n';
  }
}

void write_summary_json(std::ostream& os, const EvalReport& report) {
  nlohmann::ordered_json j;
  j["label"] = report.label;
  j["auroc"] = report.aggregate.auroc;
  j["aupr"] = report.aggregate.aupr;
  j["ap50"] = report.aggregate.ap50;
  j["side_effects"] = report.n_aggregated;
  if (report.pooled) {
    j["pooled"] = {{"auroc", report.pooled->auroc},
                   {"aupr", report.pooled->aupr},
                   {"ap50", report.pooled->ap50}};
  }
  os << j.dump(2) << '\n';
}

}  // namespace polyse

#include "polyse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "polyse/evaluator.hpp"
#include "polyse/parallel.hpp"

namespace polyse {

namespace {

std::vector<double>& dense_row(std::map<std::int64_t, std::vector<double>>& m,
                               std::int64_t key, std::size_t dim) {
  auto& v = m[key];
  if (v.empty()) v.assign(dim, 0.0);
  return v;
}

bool finite_values(const std::map<std::int64_t, std::vector<double>>& m) {
  for (const auto& [k, v] : m) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Unnormalized loss of one positive against its corruptions; accumulates
// gradients into out.
void instance_loss_and_grads(const ModelParams& params, const FeatureCache* features,
                             const TrainingInstance& inst, ScoreMode mode,
                             std::vector<double>& logits, LossAndGrads& out) {
  const std::size_t dim = params.dim();
  const std::size_t n = inst.corruptions.size() + 1;
  auto candidate = [&](std::size_t c) -> const Triple& {
    return c == 0 ? inst.positive : inst.corruptions[c - 1];
  };
  logits.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const Triple& t = candidate(c);
    logits[c] = mode == ScoreMode::Combined
                    ? poe_logit(params, *features, t.head, t.relation, t.tail, mode)
                    : distmult_score(params, t.head, t.relation, t.tail);
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  out.loss += std::log(z) + m - logits[0];

  for (std::size_t c = 0; c < n; ++c) {
    const Triple& t = candidate(c);
    // d loss / d logit_c = softmax_c - [c is the positive]
    const double g = std::exp(logits[c] - m) / z - (c == 0 ? 1.0 : 0.0);
    const auto eh = params.embedding(t.head);
    const auto et = params.embedding(t.tail);
    const auto w = params.embed_weights(t.relation);
    const std::int64_t slot = params.slot(t.relation);
    auto& gh = dense_row(out.grads.entity, params.row(t.head), dim);
    auto& gt = dense_row(out.grads.entity, params.row(t.tail), dim);
    auto& gw = dense_row(out.grads.embed, slot, dim);
    for (std::size_t i = 0; i < dim; ++i) {
      gh[i] += g * et[i] * w[i];
      gt[i] += g * eh[i] * w[i];
      gw[i] += g * eh[i] * et[i];
    }
    if (mode == ScoreMode::Combined) {
      for (std::uint32_t f : features->get(t.head, t.tail).indices) {
        out.grads.rel[{slot, f}] += g;
      }
    }
  }
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string format_epoch(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu %.6f %.6f %.6f %.3f", r.epoch, r.loss, r.valid_auroc,
                r.valid_aupr, r.elapsed_s);
  return buf;
}

struct EarlyStopper {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t since = 0;
  std::size_t best_epoch = 0;

  // True when this epoch becomes the new best.
  bool observe(std::size_t epoch, const EvalReport& report) {
    const bool usable = report.n_aggregated > 0;
    if (!usable || report.aggregate.aupr > best) {
      if (usable) best = report.aggregate.aupr;
      since = 0;
      best_epoch = epoch;
      return true;
    }
    ++since;
    return false;
  }
};

}  // namespace

const char* to_string(OptimizerKind kind) {
  return kind == OptimizerKind::SGD ? "sgd" : "adagrad";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "adagrad") return OptimizerKind::AdaGrad;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void TrainConfig::validate() const {
  if (negatives_per_positive == 0) throw ConfigError("negatives_per_positive must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a non-negative number");
  }
  if (patience == 0) throw ConfigError("patience must be positive");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  if (dim == 0) throw ConfigError("dim must be positive");
  if (threads == 0) throw ConfigError("threads must be positive");
  if (deterministic && threads != 1) throw ConfigError("deterministic mode requires --threads 1");
}

void write_epoch_line(std::ostream& os, const EpochRecord& r) { os << format_epoch(r) << '\n'; }

std::vector<Triple> sample_corruptions(const KnowledgeGraph& g, const Triple& d,
                                       std::size_t n, std::span<const EntityId> pool,
                                       Rng& rng) {
  if (d.relation.kind != RelationKind::PolypharmacySideEffect) {
    throw std::invalid_argument("corruptions are defined for polypharmacy triples");
  }
  // side 0 replaces the head, side 1 the tail.
  auto make = [&](std::size_t side, EntityId u) -> std::optional<Triple> {
    const EntityId replaced = side == 0 ? d.head : d.tail;
    const EntityId kept = side == 0 ? d.tail : d.head;
    if (u == replaced || u == kept) return std::nullopt;
    const Triple t = canonical(Triple{u, d.relation, kept});
    if (g.contains(t)) return std::nullopt;
    return t;
  };

  std::vector<Triple> out;
  out.reserve(n);
  std::vector<Triple> valid;  // filled only if rejection stalls
  constexpr std::size_t kMaxAttempts = 64;
  while (out.size() < n) {
    if (valid.empty()) {
      bool found = false;
      for (std::size_t a = 0; a < kMaxAttempts && !pool.empty(); ++a) {
        const std::size_t side = uniform_index(rng, 2);
        if (auto t = make(side, pool[uniform_index(rng, pool.size())])) {
          out.push_back(*t);
          found = true;
          break;
        }
      }
      if (found) continue;
      // Enumerate once; sampling uniformly from the enumeration has the
      // same distribution as the rejection loop.
      for (std::size_t side = 0; side < 2; ++side) {
        for (const EntityId u : pool) {
          if (auto t = make(side, u)) valid.push_back(*t);
        }
      }
      if (valid.empty()) {
        throw Exhausted("no valid corruption for side effect '" +
                        g.relation_key(d.relation) + "' among " +
                        std::to_string(pool.size()) + " drugs");
      }
    }
    out.push_back(valid[uniform_index(rng, valid.size())]);
  }
  return out;
}

void SparseGradients::merge(const SparseGradients& other) {
  auto merge_rows = [](std::map<std::int64_t, std::vector<double>>& into,
                       const std::map<std::int64_t, std::vector<double>>& from) {
    for (const auto& [k, v] : from) {
      auto& dst = into[k];
      if (dst.empty()) {
        dst = v;
      } else {
        for (std::size_t i = 0; i < v.size(); ++i) dst[i] += v[i];
      }
    }
  };
  merge_rows(entity, other.entity);
  merge_rows(embed, other.embed);
  for (const auto& [k, v] : other.rel) rel[k] += v;
}

bool SparseGradients::all_finite() const {
  if (!finite_values(entity) || !finite_values(embed)) return false;
  return std::all_of(rel.begin(), rel.end(),
                     [](const auto& kv) { return std::isfinite(kv.second); });
}

LossAndGrads batch_loss_and_grads(const ModelParams& params, const FeatureCache* features,
                                  std::span<const TrainingInstance> batch, ScoreMode mode,
                                  double l2, std::size_t threads) {
  if (mode == ScoreMode::Combined && !features) {
    throw std::invalid_argument("combined mode needs relational features");
  }
  const std::size_t chunks = std::max<std::size_t>(1, std::min(threads, batch.size()));
  std::vector<LossAndGrads> parts(chunks);
  parallel_chunks(batch.size(), chunks, [&](std::size_t begin, std::size_t end, std::size_t c) {
    std::vector<double> logits;
    for (std::size_t i = begin; i < end; ++i) {
      instance_loss_and_grads(params, features, batch[i], mode, logits, parts[c]);
    }
  });
  LossAndGrads out = std::move(parts[0]);
  for (std::size_t c = 1; c < parts.size(); ++c) {
    out.loss += parts[c].loss;
    out.grads.merge(parts[c].grads);
  }

  if (l2 > 0.0) {
    const std::size_t dim = params.dim();
    for (auto& [row, g] : out.grads.entity) {
      const double* theta = params.entity_table().data() + row * dim;
      for (std::size_t i = 0; i < dim; ++i) {
        out.loss += l2 * theta[i] * theta[i];
        g[i] += 2.0 * l2 * theta[i];
      }
    }
    for (auto& [slot, g] : out.grads.embed) {
      const double* theta = params.embed_table().data() + slot * dim;
      for (std::size_t i = 0; i < dim; ++i) {
        out.loss += l2 * theta[i] * theta[i];
        g[i] += 2.0 * l2 * theta[i];
      }
    }
    for (auto& [key, g] : out.grads.rel) {
      const double theta = params.rel_table()[key.first * params.n_features() + key.second];
      out.loss += l2 * theta * theta;
      g += 2.0 * l2 * theta;
    }
  }

  if (!std::isfinite(out.loss) || !out.grads.all_finite()) {
    throw NonFinite("non-finite loss or gradient");
  }
  return out;
}

void Optimizer::step(double& theta, double& accumulator, double grad) const {
  if (kind_ == OptimizerKind::SGD) {
    theta -= lr_ * grad;
    return;
  }
  accumulator += grad * grad;
  if (accumulator > 0.0) theta -= lr_ * grad / (std::sqrt(accumulator) + 1e-10);
}

void TrainState::apply(const SparseGradients& grads, const Optimizer& opt) {
  const std::size_t dim = params.dim();
  for (const auto& [row, g] : grads.entity) {
    double* theta = params.entity_table().data() + row * dim;
    double* acc = entity_accum.data() + row * dim;
    for (std::size_t i = 0; i < dim; ++i) opt.step(theta[i], acc[i], g[i]);
  }
  for (const auto& [slot, g] : grads.embed) {
    double* theta = params.embed_table().data() + slot * dim;
    double* acc = embed_accum.data() + slot * dim;
    for (std::size_t i = 0; i < dim; ++i) opt.step(theta[i], acc[i], g[i]);
  }
  const std::size_t nf = params.n_features();
  for (const auto& [key, g] : grads.rel) {
    const std::size_t at = key.first * nf + key.second;
    opt.step(params.rel_table()[at], rel_accum[at], g);
  }
}

std::vector<EntityId> example_drugs(const Splits& splits) {
  std::vector<EntityId> drugs;
  for (const auto* part : {&splits.train, &splits.valid, &splits.test}) {
    for (const Example& e : *part) {
      drugs.push_back(e.drug_a);
      drugs.push_back(e.drug_b);
    }
  }
  std::sort(drugs.begin(), drugs.end());
  drugs.erase(std::unique(drugs.begin(), drugs.end()), drugs.end());
  return drugs;
}

TrainResult train(const KnowledgeGraph& g, const Splits& splits,
                  const RelationalFeatureSpace& space, const TrainConfig& cfg,
                  std::ostream* log_sink) {
  cfg.validate();
  const bool combined = cfg.mode == ScoreMode::Combined;
  const std::vector<EntityId> drugs = example_drugs(splits);

  TrainState st;
  st.params = initialize_params(drugs, g.relations_of(RelationKind::PolypharmacySideEffect),
                                combined ? space.size() : 0, cfg.dim, cfg.seed);
  st.entity_accum.assign(st.params.entity_table().size(), 0.0);
  st.embed_accum.assign(st.params.embed_table().size(), 0.0);
  st.rel_accum.assign(st.params.rel_table().size(), 0.0);

  const FeatureCache cache(space, g);
  const FeatureCache* features = combined ? &cache : nullptr;
  const Optimizer opt(cfg.optimizer, cfg.learning_rate);

  std::vector<Triple> positives;
  for (const Example& e : splits.train) {
    if (e.positive()) positives.push_back(e.triple());
  }

  TrainResult result;
  result.params = st.params;
  EarlyStopper stopper;
  std::vector<std::size_t> order(positives.size());
  std::vector<TrainingInstance> batch;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    st.epoch = epoch;
    const Stopwatch clock;
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_rng(cfg.seed, streams::kShuffle, epoch);
    shuffle(std::span<std::size_t>(order), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Rng rng = make_rng(cfg.seed, streams::kCorruption, (std::uint64_t{epoch} << 32) | b);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        const Triple& d = positives[order[i]];
        batch.push_back(TrainingInstance{
            d, sample_corruptions(g, d, cfg.negatives_per_positive, drugs, rng)});
      }
      LossAndGrads lg;
      try {
        lg = batch_loss_and_grads(st.params, features, batch, cfg.mode, cfg.l2, cfg.threads);
      } catch (const NonFinite& e) {
        throw TrainingDiverged(std::string(e.what()) + " in epoch " + std::to_string(epoch),
                               result.log);
      }
      loss_sum += lg.loss;
      st.apply(lg.grads, opt);
    }

    const PoeScorer scorer(st.params, features, cfg.mode);
    const EvalReport valid = evaluate(
        [&](const Example& e) { return scorer.logit(e.drug_a, e.side_effect, e.drug_b); },
        splits.valid, cfg.threads);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = positives.empty() ? 0.0 : loss_sum / static_cast<double>(positives.size());
    rec.valid_auroc = valid.aggregate.auroc;
    rec.valid_aupr = valid.aggregate.aupr;
    rec.elapsed_s = cfg.deterministic ? 0.0 : clock.seconds();
    result.log.push_back(rec);
    if (log_sink) write_epoch_line(*log_sink, rec);

    if (stopper.observe(epoch, valid)) {
      result.params = st.params;
      st.best_valid_metric = rec.valid_aupr;
    }
    st.epochs_since_improvement = stopper.since;
    if (st.epochs_since_improvement >= cfg.patience) break;
  }
  result.best_epoch = stopper.best_epoch;
  result.best_valid_aupr = st.best_valid_metric;
  return result;
}

// ---- Baseline ----

BaselineFeaturizer::BaselineFeaturizer(const KnowledgeGraph& g, const BaselineVocabulary& vocab)
    : vocab_(vocab), per_drug_(g.entity_count()) {
  for (const EntityId d : g.entities_of(EntityKind::Drug)) {
    per_drug_[d.index] = vocab.indicators(g, d);
  }
}

BinaryVector BaselineFeaturizer::featurize(EntityId a, EntityId b) const {
  const DrugPair p = DrugPair::canonical(a, b);
  const auto half = static_cast<std::uint32_t>(vocab_.size());
  BinaryVector x;
  x.dim = 2 * vocab_.size();
  x.indices = per_drug_.at(p.first.index);
  for (std::uint32_t i : per_drug_.at(p.second.index)) x.indices.push_back(half + i);
  return x;
}

BaselineLossAndGrads baseline_loss_and_grads(const BaselineParams& bp,
                                             const BaselineFeaturizer& featurizer,
                                             std::span<const Example> batch, double l2) {
  BaselineLossAndGrads out;
  for (const Example& e : batch) {
    const BinaryVector x = featurizer.featurize(e.drug_a, e.drug_b);
    const double z = baseline_score(bp, x, e.side_effect);
    const double y = e.positive() ? 1.0 : 0.0;
    out.loss += softplus(z) - y * z;
    const double dz = sigmoid(z) - y;
    const std::int64_t slot = bp.slot(e.side_effect);
    for (std::uint32_t i : x.indices) out.grads.weights[{slot, i}] += dz;
    out.grads.bias[slot] += dz;
  }
  if (l2 > 0.0) {
    for (auto& [key, g] : out.grads.weights) {
      const double w = bp.weights[key.first * bp.dim + key.second];
      out.loss += l2 * w * w;
      g += 2.0 * l2 * w;
    }
  }
  bool finite = std::isfinite(out.loss);
  for (const auto& [k, g] : out.grads.weights) finite = finite && std::isfinite(g);
  for (const auto& [k, g] : out.grads.bias) finite = finite && std::isfinite(g);
  if (!finite) throw NonFinite("non-finite baseline loss or gradient");
  return out;
}

BaselineResult train_baseline(const KnowledgeGraph& g, const Splits& splits,
                              const BaselineVocabulary& vocab, const TrainConfig& cfg,
                              std::ostream* log_sink) {
  cfg.validate();
  BaselineParams bp(2 * vocab.size(), g.relations_of(RelationKind::PolypharmacySideEffect));
  std::vector<double> w_accum(bp.weights.size(), 0.0);
  std::vector<double> b_accum(bp.bias.size(), 0.0);
  const BaselineFeaturizer featurizer(g, vocab);
  const Optimizer opt(cfg.optimizer, cfg.learning_rate);

  BaselineResult result;
  result.params = bp;
  EarlyStopper stopper;
  std::vector<std::size_t> order(splits.train.size());
  std::vector<Example> batch;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const Stopwatch clock;
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(cfg.seed, streams::kShuffle, epoch);
    shuffle(std::span<std::size_t>(order), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(splits.train[order[i]]);
      BaselineLossAndGrads lg;
      try {
        lg = baseline_loss_and_grads(bp, featurizer, batch, cfg.l2);
      } catch (const NonFinite& e) {
        throw TrainingDiverged(std::string(e.what()) + " in epoch " + std::to_string(epoch),
                               result.log);
      }
      loss_sum += lg.loss;
      for (const auto& [key, grad] : lg.grads.weights) {
        const std::size_t at = key.first * bp.dim + key.second;
        opt.step(bp.weights[at], w_accum[at], grad);
      }
      for (const auto& [slot, grad] : lg.grads.bias) opt.step(bp.bias[slot], b_accum[slot], grad);
    }

    const EvalReport valid = evaluate(
        [&](const Example& e) {
          return baseline_score(bp, featurizer.featurize(e.drug_a, e.drug_b), e.side_effect);
        },
        splits.valid, cfg.threads);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
    rec.valid_auroc = valid.aggregate.auroc;
    rec.valid_aupr = valid.aggregate.aupr;
    rec.elapsed_s = cfg.deterministic ? 0.0 : clock.seconds();
    result.log.push_back(rec);
    if (log_sink) write_epoch_line(*log_sink, rec);

    if (stopper.observe(epoch, valid)) result.params = bp;
    if (stopper.since >= cfg.patience) break;
  }
  result.best_epoch = stopper.best_epoch;
  return result;
}

}  // namespace polyse

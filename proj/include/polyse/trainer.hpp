#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyse/dataset.hpp"
#include "polyse/error.hpp"
#include "polyse/features.hpp"
#include "polyse/graph.hpp"
#include "polyse/model.hpp"
#include "polyse/random.hpp"

namespace polyse {

enum class OptimizerKind { SGD, AdaGrad };

const char* to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct TrainConfig {
  std::size_t negatives_per_positive = 10;
  std::size_t batch_size = 512;
  double learning_rate = 0.1;
  OptimizerKind optimizer = OptimizerKind::AdaGrad;
  std::size_t max_epochs = 50;
  // Epochs without validation AuPR improvement before stopping.
  std::size_t patience = 5;
  std::uint64_t seed = 17;
  ScoreMode mode = ScoreMode::Combined;
  double l2 = 0.0;
  std::size_t dim = 100;
  std::size_t threads = 1;
  // Log elapsed time as zero so logs are byte-reproducible.
  bool deterministic = false;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double valid_auroc = 0.0;
  double valid_aupr = 0.0;
  double elapsed_s = 0.0;
};

// `epoch loss valid_auroc valid_aupr elapsed_s`
void write_epoch_line(std::ostream& os, const EpochRecord& r);

class TrainingDiverged : public NonFinite {
 public:
  TrainingDiverged(const std::string& what, std::vector<EpochRecord> log)
      : NonFinite(what), log_(std::move(log)) {}
  const std::vector<EpochRecord>& log() const { return log_; }

 private:
  std::vector<EpochRecord> log_;
};

// Replaces one endpoint of d (side chosen uniformly) by a uniformly drawn
// drug from pool, rejecting self-pairs and triples present in g. Draws are
// independent, so the result may repeat a corruption. Throws Exhausted if
// no valid corruption exists.
std::vector<Triple> sample_corruptions(const KnowledgeGraph& g, const Triple& d,
                                       std::size_t n, std::span<const EntityId> pool,
                                       Rng& rng);

struct TrainingInstance {
  Triple positive;
  std::vector<Triple> corruptions;
};

// Gradients for the parameters touched by one batch.
struct SparseGradients {
  std::map<std::int64_t, std::vector<double>> entity;  // embedding row
  std::map<std::int64_t, std::vector<double>> embed;   // relation slot
  std::map<std::pair<std::int64_t, std::uint32_t>, double> rel;  // (slot, feature)

  void merge(const SparseGradients& other);
  bool all_finite() const;
};

struct LossAndGrads {
  double loss = 0.0;
  SparseGradients grads;
};

// Sampled-softmax negative log-likelihood of each positive against its
// corruptions, plus l2 times the squared norm of every touched parameter,
// and its exact gradient. `features` may be null in EmbeddingOnly mode.
// Throws NonFinite on a non-finite loss or gradient.
LossAndGrads batch_loss_and_grads(const ModelParams& params, const FeatureCache* features,
                                  std::span<const TrainingInstance> batch, ScoreMode mode,
                                  double l2, std::size_t threads = 1);

// Per-parameter SGD or AdaGrad step. Accumulators mirror the parameter
// tables they serve.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate)
      : kind_(kind), lr_(learning_rate) {}

  void step(double& theta, double& accumulator, double grad) const;

 private:
  OptimizerKind kind_;
  double lr_;
};

struct TrainState {
  ModelParams params;
  std::size_t epoch = 0;
  double best_valid_metric = 0.0;
  std::size_t epochs_since_improvement = 0;
  // AdaGrad accumulators, shaped like the three parameter tables.
  std::vector<double> entity_accum;
  std::vector<double> embed_accum;
  std::vector<double> rel_accum;

  void apply(const SparseGradients& grads, const Optimizer& opt);
};

struct TrainResult {
  ModelParams params;  // best validation checkpoint
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_valid_aupr = 0.0;
};

// Drugs mentioned by any example, in id order. These receive embeddings.
std::vector<EntityId> example_drugs(const Splits& splits);

// Trains on the positive training examples, scoring candidates against
// graph g (the training graph) with features from `space`. After each
// epoch the validation split is ranked; the parameters with the best
// validation AuPR are returned. `log_sink`, when set, receives one line per
// epoch as it completes.
TrainResult train(const KnowledgeGraph& g, const Splits& splits,
                  const RelationalFeatureSpace& space, const TrainConfig& cfg,
                  std::ostream* log_sink = nullptr);

// ---- Baseline ----

// Caches per-drug indicator lists for repeated featurization.
class BaselineFeaturizer {
 public:
  BaselineFeaturizer(const KnowledgeGraph& g, const BaselineVocabulary& vocab);
  BinaryVector featurize(EntityId a, EntityId b) const;
  const BaselineVocabulary& vocabulary() const { return vocab_; }

 private:
  const BaselineVocabulary& vocab_;
  std::vector<std::vector<std::uint32_t>> per_drug_;
};

struct BaselineGradients {
  std::map<std::pair<std::int64_t, std::uint32_t>, double> weights;  // (slot, index)
  std::map<std::int64_t, double> bias;
};

struct BaselineLossAndGrads {
  double loss = 0.0;
  BaselineGradients grads;
};

// Summed logistic loss over labelled examples plus l2 on touched weights.
BaselineLossAndGrads baseline_loss_and_grads(const BaselineParams& bp,
                                             const BaselineFeaturizer& featurizer,
                                             std::span<const Example> batch, double l2);

struct BaselineResult {
  BaselineParams params;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
};

// Per-side-effect logistic regression on training examples (both labels),
// early-stopped on validation AuPR. max_epochs = 0 returns the zero
// initialization.
BaselineResult train_baseline(const KnowledgeGraph& g, const Splits& splits,
                              const BaselineVocabulary& vocab, const TrainConfig& cfg,
                              std::ostream* log_sink = nullptr);

}  // namespace polyse

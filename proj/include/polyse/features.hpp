#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "polyse/dataset.hpp"
#include "polyse/graph.hpp"

namespace polyse {

enum class TemplateKind : std::uint8_t {
  // hasTarget(h,p) and hasTarget(t,p)
  SharedTarget,
  // hasTarget(h,p), interactsWith(p,q), hasTarget(t,q), either orientation
  InteractingTargets,
};

const char* to_string(TemplateKind kind);

// For SharedTarget, first == second. For InteractingTargets, first < second.
struct FeatureTemplate {
  TemplateKind kind = TemplateKind::SharedTarget;
  EntityId first;
  EntityId second;

  static FeatureTemplate shared(EntityId p) {
    return {TemplateKind::SharedTarget, p, p};
  }
  static FeatureTemplate interacting(EntityId p, EntityId q) {
    return p.index < q.index ? FeatureTemplate{TemplateKind::InteractingTargets, p, q}
                             : FeatureTemplate{TemplateKind::InteractingTargets, q, p};
  }
  std::uint64_t key() const {
    return (std::uint64_t{kind == TemplateKind::InteractingTargets} << 63) |
           (std::uint64_t{first.index} << 32) | second.index;
  }
  friend bool operator==(const FeatureTemplate&, const FeatureTemplate&) = default;
};

// Active template indices of a drug pair, sorted and unique.
struct FeatureVector {
  std::vector<std::uint32_t> indices;

  bool empty() const { return indices.empty(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

class RelationalFeatureSpace {
 public:
  RelationalFeatureSpace() = default;
  // Templates are re-ordered: SharedTarget by protein, then
  // InteractingTargets by (first, second).
  RelationalFeatureSpace(std::vector<FeatureTemplate> templates,
                         std::vector<std::size_t> support,
                         std::size_t min_support);

  std::size_t size() const { return templates_.size(); }
  bool empty() const { return templates_.empty(); }
  const FeatureTemplate& at(std::uint32_t index) const { return templates_.at(index); }
  std::span<const FeatureTemplate> templates() const { return templates_; }
  std::size_t support(std::uint32_t index) const { return support_.at(index); }
  std::size_t min_support() const { return min_support_; }
  std::optional<std::uint32_t> index_of(const FeatureTemplate& t) const;

  // Content hash over templates (by index) and min_support. Checkpoints
  // record it to refuse loading weights against a different space.
  std::uint64_t hash() const;

 private:
  std::vector<FeatureTemplate> templates_;
  std::vector<std::size_t> support_;
  std::size_t min_support_ = 1;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

// Which drug pairs count towards template support.
enum class SupportPairs { TrainPositives, TrainAll };

const char* to_string(SupportPairs s);
SupportPairs parse_support_pairs(const std::string& name);

// Distinct drug pairs of the training split, in first-seen order.
std::vector<DrugPair> support_pairs(std::span<const Example> train,
                                    SupportPairs which);

// Every template instance matched by some pair, with the number of pairs
// matching it. Not pruned.
std::unordered_map<std::uint64_t, std::size_t> count_templates(
    const KnowledgeGraph& g, std::span<const DrugPair> pairs);

// Templates matched by at least min_support of the given pairs.
RelationalFeatureSpace enumerate_templates(const KnowledgeGraph& g,
                                           std::span<const DrugPair> pairs,
                                           std::size_t min_support);

FeatureVector featurize(const RelationalFeatureSpace& space,
                        const KnowledgeGraph& g, EntityId h, EntityId t);

// Memoized featurize keyed by canonical pair. Safe for concurrent use.
class FeatureCache {
 public:
  FeatureCache(const RelationalFeatureSpace& space, const KnowledgeGraph& g)
      : space_(space), graph_(g) {}

  const FeatureVector& get(EntityId h, EntityId t) const;
  const RelationalFeatureSpace& space() const { return space_; }
  const KnowledgeGraph& graph() const { return graph_; }

 private:
  const RelationalFeatureSpace& space_;
  const KnowledgeGraph& graph_;
  mutable std::shared_mutex mutex_;
  // Node-based map: references stay valid across rehash.
  mutable std::unordered_map<std::uint64_t, FeatureVector> memo_;
};

// Manifest: header line, then `index kind protein[,protein] support` rows.
void write_feature_manifest(std::ostream& os, const RelationalFeatureSpace& space,
                            const KnowledgeGraph& g);
void write_feature_manifest(const std::filesystem::path& path,
                            const RelationalFeatureSpace& space,
                            const KnowledgeGraph& g);
RelationalFeatureSpace read_feature_manifest(const std::filesystem::path& path,
                                             const KnowledgeGraph& g);

}  // namespace polyse

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace polyse {

enum class EntityKind : std::uint8_t {
  Drug,
  Protein,
  // Vocabulary entry for single-drug side effects. Never embedded.
  MonoEffect,
};

enum class RelationKind : std::uint8_t {
  PolypharmacySideEffect,
  HasTarget,
  InteractsWith,
  MonoSideEffect,
};

const char* to_string(EntityKind kind);
const char* to_string(RelationKind kind);

constexpr bool is_symmetric(RelationKind kind) {
  return kind == RelationKind::PolypharmacySideEffect ||
         kind == RelationKind::InteractsWith;
}

struct EntityId {
  std::uint32_t index = 0;
  EntityKind kind = EntityKind::Drug;

  friend bool operator==(EntityId, EntityId) = default;
  friend std::strong_ordering operator<=>(EntityId a, EntityId b) {
    return a.index <=> b.index;
  }
};

struct RelationId {
  std::uint32_t index = 0;
  RelationKind kind = RelationKind::PolypharmacySideEffect;

  friend bool operator==(RelationId, RelationId) = default;
  friend std::strong_ordering operator<=>(RelationId a, RelationId b) {
    return a.index <=> b.index;
  }
};

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// Unordered pair of distinct drugs, stored with first < second.
struct DrugPair {
  EntityId first;
  EntityId second;

  static DrugPair canonical(EntityId a, EntityId b) {
    return a.index <= b.index ? DrugPair{a, b} : DrugPair{b, a};
  }
  std::uint64_t key() const {
    return (std::uint64_t{first.index} << 32) | second.index;
  }
  friend bool operator==(const DrugPair&, const DrugPair&) = default;
  friend auto operator<=>(const DrugPair& a, const DrugPair& b) {
    return a.key() <=> b.key();
  }
};

// Swaps endpoints of a symmetric triple so that head <= tail.
Triple canonical(const Triple& t);

// Multi-relational graph of drugs, proteins and side-effect vocabulary.
//
// Built by a single writer through intern_* and add_triple, then frozen.
// Symmetric relations are stored once as (min id, max id) and answer
// lookups in both directions. Adjacency lists are kept sorted on insert so
// lookups are valid at any point during construction.
class KnowledgeGraph {
 public:
  // Packing limits for the triple hash key.
  static constexpr std::uint32_t kMaxEntities = 1u << 24;
  static constexpr std::uint32_t kMaxRelations = 1u << 16;

  EntityId intern_entity(std::string_view key, EntityKind kind);
  RelationId intern_relation(std::string_view key, RelationKind kind);

  std::optional<EntityId> find_entity(std::string_view key) const;
  std::optional<RelationId> find_relation(std::string_view key) const;
  // The unique HasTarget / InteractsWith / MonoSideEffect relation, if any.
  std::optional<RelationId> singleton_relation(RelationKind kind) const;

  const std::string& entity_key(EntityId e) const;
  const std::string& relation_key(RelationId r) const;

  // Human-readable name of a relation; falls back to the key.
  const std::string& relation_label(RelationId r) const;
  void set_relation_label(RelationId r, std::string label);

  std::size_t entity_count() const { return entity_kinds_.size(); }
  std::size_t relation_count() const { return relation_kinds_.size(); }
  EntityId entity(std::uint32_t index) const;
  RelationId relation(std::uint32_t index) const;
  std::vector<EntityId> entities_of(EntityKind kind) const;
  std::vector<RelationId> relations_of(RelationKind kind) const;

  // Returns false when the canonical triple is already present.
  // Throws SchemaViolation on endpoint kind mismatch or self-loop.
  bool add_triple(const Triple& t);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // Tails of (e, r, *); for symmetric r, every u with (e,r,u) or (u,r,e).
  std::span<const EntityId> neighbors(EntityId e, RelationId r) const;
  // Heads of (*, r, e). Same as neighbors for symmetric relations.
  std::span<const EntityId> inverse_neighbors(EntityId e, RelationId r) const;

  bool contains(const Triple& t) const;

  std::span<const Triple> triples() const { return triples_; }
  std::size_t triple_count() const { return triples_.size(); }
  std::size_t triple_count(RelationId r) const;

  // New frozen graph with identical interning tables and the subset of
  // triples accepted by keep, in the original order.
  KnowledgeGraph filtered(const std::function<bool(const Triple&)>& keep) const;

  // Copy of the interning tables with no triples, unfrozen.
  KnowledgeGraph empty_copy() const;

 private:
  static std::uint64_t adjacency_key(EntityId e, RelationId r) {
    return (std::uint64_t{e.index} << 32) | r.index;
  }
  static std::uint64_t triple_key(const Triple& t);
  static void insert_sorted(std::vector<EntityId>& list, EntityId e);
  void check_schema(const Triple& t) const;

  std::vector<std::string> entity_keys_;
  std::vector<EntityKind> entity_kinds_;
  std::unordered_map<std::string, std::uint32_t> entity_index_;

  std::vector<std::string> relation_keys_;
  std::vector<RelationKind> relation_kinds_;
  std::vector<std::string> relation_labels_;
  std::unordered_map<std::string, std::uint32_t> relation_index_;

  std::vector<Triple> triples_;
  std::unordered_set<std::uint64_t> triple_set_;
  std::vector<std::size_t> relation_counts_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> out_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> in_;
  bool frozen_ = false;
};

// FNV-1a over bytes. Used for manifests and content hashes.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  void update_u64(std::uint64_t v);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

// Content hash over interning tables and triples in insertion order.
std::uint64_t graph_hash(const KnowledgeGraph& g);

}  // namespace polyse

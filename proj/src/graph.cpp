#include "polyse/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "polyse/error.hpp"

namespace polyse {

const char* to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Drug: return "drug";
    case EntityKind::Protein: return "protein";
    case EntityKind::MonoEffect: return "mono_effect";
  }
  return "?";
}

const char* to_string(RelationKind kind) {
  switch (kind) {
    case RelationKind::PolypharmacySideEffect: return "polypharmacy";
    case RelationKind::HasTarget: return "has_target";
    case RelationKind::InteractsWith: return "interacts_with";
    case RelationKind::MonoSideEffect: return "mono_side_effect";
  }
  return "?";
}

Triple canonical(const Triple& t) {
  if (is_symmetric(t.relation.kind) && t.tail.index < t.head.index) {
    return Triple{t.tail, t.relation, t.head};
  }
  return t;
}

EntityId KnowledgeGraph::intern_entity(std::string_view key, EntityKind kind) {
  if (key.empty()) throw SchemaViolation("empty entity key");
  if (auto it = entity_index_.find(std::string(key)); it != entity_index_.end()) {
    const EntityKind existing = entity_kinds_[it->second];
    if (existing != kind) {
      throw KindConflict("entity '" + std::string(key) + "' interned as " +
                         to_string(existing) + ", requested " + to_string(kind));
    }
    return EntityId{it->second, kind};
  }
  if (frozen_) throw std::logic_error("intern_entity on frozen graph");
  if (entity_kinds_.size() >= kMaxEntities) {
    throw SchemaViolation("entity table full");
  }
  const auto index = static_cast<std::uint32_t>(entity_kinds_.size());
  entity_keys_.emplace_back(key);
  entity_kinds_.push_back(kind);
  entity_index_.emplace(std::string(key), index);
  return EntityId{index, kind};
}

RelationId KnowledgeGraph::intern_relation(std::string_view key,
                                           RelationKind kind) {
  if (key.empty()) throw SchemaViolation("empty relation key");
  if (auto it = relation_index_.find(std::string(key));
      it != relation_index_.end()) {
    const RelationKind existing = relation_kinds_[it->second];
    if (existing != kind) {
      throw KindConflict("relation '" + std::string(key) + "' interned as " +
                         to_string(existing) + ", requested " + to_string(kind));
    }
    return RelationId{it->second, kind};
  }
  if (frozen_) throw std::logic_error("intern_relation on frozen graph");
  if (kind != RelationKind::PolypharmacySideEffect && singleton_relation(kind)) {
    throw SchemaViolation(std::string("a second ") + to_string(kind) +
                          " relation ('" + std::string(key) + "')");
  }
  if (relation_kinds_.size() >= kMaxRelations) {
    throw SchemaViolation("relation table full");
  }
  const auto index = static_cast<std::uint32_t>(relation_kinds_.size());
  relation_keys_.emplace_back(key);
  relation_kinds_.push_back(kind);
  relation_labels_.emplace_back();
  relation_counts_.push_back(0);
  relation_index_.emplace(std::string(key), index);
  return RelationId{index, kind};
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view key) const {
  auto it = entity_index_.find(std::string(key));
  if (it == entity_index_.end()) return std::nullopt;
  return EntityId{it->second, entity_kinds_[it->second]};
}

std::optional<RelationId> KnowledgeGraph::find_relation(
    std::string_view key) const {
  auto it = relation_index_.find(std::string(key));
  if (it == relation_index_.end()) return std::nullopt;
  return RelationId{it->second, relation_kinds_[it->second]};
}

std::optional<RelationId> KnowledgeGraph::singleton_relation(
    RelationKind kind) const {
  for (std::uint32_t i = 0; i < relation_kinds_.size(); ++i) {
    if (relation_kinds_[i] == kind) return RelationId{i, kind};
  }
  return std::nullopt;
}

const std::string& KnowledgeGraph::entity_key(EntityId e) const {
  return entity_keys_.at(e.index);
}

const std::string& KnowledgeGraph::relation_key(RelationId r) const {
  return relation_keys_.at(r.index);
}

const std::string& KnowledgeGraph::relation_label(RelationId r) const {
  const std::string& label = relation_labels_.at(r.index);
  return label.empty() ? relation_keys_[r.index] : label;
}

void KnowledgeGraph::set_relation_label(RelationId r, std::string label) {
  relation_labels_.at(r.index) = std::move(label);
}

EntityId KnowledgeGraph::entity(std::uint32_t index) const {
  return EntityId{index, entity_kinds_.at(index)};
}

RelationId KnowledgeGraph::relation(std::uint32_t index) const {
  return RelationId{index, relation_kinds_.at(index)};
}

std::vector<EntityId> KnowledgeGraph::entities_of(EntityKind kind) const {
  std::vector<EntityId> out;
  for (std::uint32_t i = 0; i < entity_kinds_.size(); ++i) {
    if (entity_kinds_[i] == kind) out.push_back(EntityId{i, kind});
  }
  return out;
}

std::vector<RelationId> KnowledgeGraph::relations_of(RelationKind kind) const {
  std::vector<RelationId> out;
  for (std::uint32_t i = 0; i < relation_kinds_.size(); ++i) {
    if (relation_kinds_[i] == kind) out.push_back(RelationId{i, kind});
  }
  return out;
}

std::uint64_t KnowledgeGraph::triple_key(const Triple& t) {
  return (std::uint64_t{t.relation.index} << 48) |
         (std::uint64_t{t.head.index} << 24) | t.tail.index;
}

void KnowledgeGraph::insert_sorted(std::vector<EntityId>& list, EntityId e) {
  list.insert(std::lower_bound(list.begin(), list.end(), e), e);
}

void KnowledgeGraph::check_schema(const Triple& t) const {
  if (t.head.index >= entity_kinds_.size() ||
      t.tail.index >= entity_kinds_.size() ||
      t.relation.index >= relation_kinds_.size()) {
    throw SchemaViolation("triple references an id that was never interned");
  }
  if (entity_kinds_[t.head.index] != t.head.kind ||
      entity_kinds_[t.tail.index] != t.tail.kind ||
      relation_kinds_[t.relation.index] != t.relation.kind) {
    throw SchemaViolation("triple carries a stale kind tag");
  }
  EntityKind head = EntityKind::Drug;
  EntityKind tail = EntityKind::Drug;
  switch (t.relation.kind) {
    case RelationKind::PolypharmacySideEffect: break;
    case RelationKind::HasTarget: tail = EntityKind::Protein; break;
    case RelationKind::InteractsWith:
      head = tail = EntityKind::Protein;
      break;
    case RelationKind::MonoSideEffect: tail = EntityKind::MonoEffect; break;
  }
  if (t.head.kind != head || t.tail.kind != tail) {
    throw SchemaViolation(std::string(to_string(t.relation.kind)) +
                          " expects " + to_string(head) + " -> " +
                          to_string(tail) + ", got '" + entity_key(t.head) +
                          "' (" + to_string(t.head.kind) + ") -> '" +
                          entity_key(t.tail) + "' (" + to_string(t.tail.kind) +
                          ")");
  }
  if (t.head == t.tail) {
    throw SchemaViolation("self-loop on '" + entity_key(t.head) + "'");
  }
}

bool KnowledgeGraph::add_triple(const Triple& t) {
  if (frozen_) throw std::logic_error("add_triple on frozen graph");
  check_schema(t);
  const Triple c = canonical(t);
  if (!triple_set_.insert(triple_key(c)).second) return false;
  triples_.push_back(c);
  ++relation_counts_[c.relation.index];
  insert_sorted(out_[adjacency_key(c.head, c.relation)], c.tail);
  if (is_symmetric(c.relation.kind)) {
    insert_sorted(out_[adjacency_key(c.tail, c.relation)], c.head);
  } else {
    insert_sorted(in_[adjacency_key(c.tail, c.relation)], c.head);
  }
  return true;
}

std::span<const EntityId> KnowledgeGraph::neighbors(EntityId e,
                                                    RelationId r) const {
  auto it = out_.find(adjacency_key(e, r));
  if (it == out_.end()) return {};
  return it->second;
}

std::span<const EntityId> KnowledgeGraph::inverse_neighbors(
    EntityId e, RelationId r) const {
  if (is_symmetric(r.kind)) return neighbors(e, r);
  auto it = in_.find(adjacency_key(e, r));
  if (it == in_.end()) return {};
  return it->second;
}

bool KnowledgeGraph::contains(const Triple& t) const {
  if (t.head.index >= kMaxEntities || t.tail.index >= kMaxEntities ||
      t.relation.index >= kMaxRelations) {
    return false;
  }
  return triple_set_.count(triple_key(canonical(t))) > 0;
}

std::size_t KnowledgeGraph::triple_count(RelationId r) const {
  return r.index < relation_counts_.size() ? relation_counts_[r.index] : 0;
}

KnowledgeGraph KnowledgeGraph::empty_copy() const {
  KnowledgeGraph g;
  g.entity_keys_ = entity_keys_;
  g.entity_kinds_ = entity_kinds_;
  g.entity_index_ = entity_index_;
  g.relation_keys_ = relation_keys_;
  g.relation_kinds_ = relation_kinds_;
  g.relation_labels_ = relation_labels_;
  g.relation_index_ = relation_index_;
  g.relation_counts_.assign(relation_kinds_.size(), 0);
  return g;
}

KnowledgeGraph KnowledgeGraph::filtered(
    const std::function<bool(const Triple&)>& keep) const {
  KnowledgeGraph g = empty_copy();
  for (const Triple& t : triples_) {
    if (keep(t)) g.add_triple(t);
  }
  g.freeze();
  return g;
}

void Fnv1a::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    state_ ^= (v >> (8 * i)) & 0xff;
    state_ *= 0x100000001b3ULL;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t graph_hash(const KnowledgeGraph& g) {
  Fnv1a h;
  for (std::uint32_t i = 0; i < g.entity_count(); ++i) {
    const EntityId e = g.entity(i);
    h.update(g.entity_key(e));
    h.update_u64(static_cast<std::uint64_t>(e.kind));
  }
  for (std::uint32_t i = 0; i < g.relation_count(); ++i) {
    const RelationId r = g.relation(i);
    h.update(g.relation_key(r));
    h.update_u64(static_cast<std::uint64_t>(r.kind));
  }
  for (const Triple& t : g.triples()) {
    h.update_u64(t.head.index);
    h.update_u64(t.relation.index);
    h.update_u64(t.tail.index);
  }
  return h.digest();
}

}  // namespace polyse

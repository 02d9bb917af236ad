#include "polyse/features.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "polyse/error.hpp"

namespace polyse {

namespace {

bool sorted_contains(std::span<const EntityId> list, EntityId e) {
  return std::binary_search(list.begin(), list.end(), e);
}

// Calls fn(template) once per distinct template instance matched by (h, t).
template <typename Fn>
void for_each_match(const KnowledgeGraph& g, EntityId h, EntityId t, Fn&& fn) {
  const auto has_target = g.singleton_relation(RelationKind::HasTarget);
  if (!has_target) return;
  const auto targets_h = g.neighbors(h, *has_target);
  const auto targets_t = g.neighbors(t, *has_target);
  if (targets_h.empty() || targets_t.empty()) return;

  // Shared targets: intersection of two sorted lists.
  {
    auto a = targets_h.begin();
    auto b = targets_t.begin();
    while (a != targets_h.end() && b != targets_t.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        fn(FeatureTemplate::shared(*a));
        ++a;
        ++b;
      }
    }
  }

  const auto interacts = g.singleton_relation(RelationKind::InteractsWith);
  if (!interacts) return;
  // {p,q} matches when p is a target of one drug, q of the other, and they
  // interact. A pair {p,q} can be reached from both sides, so deduplicate.
  std::unordered_set<std::uint64_t> seen;
  auto scan = [&](std::span<const EntityId> from, std::span<const EntityId> to) {
    for (const EntityId p : from) {
      for (const EntityId q : g.neighbors(p, *interacts)) {
        if (!sorted_contains(to, q)) continue;
        const FeatureTemplate ft = FeatureTemplate::interacting(p, q);
        if (seen.insert(ft.key()).second) fn(ft);
      }
    }
  };
  scan(targets_h, targets_t);
  scan(targets_t, targets_h);
}

}  // namespace

const char* to_string(TemplateKind kind) {
  return kind == TemplateKind::SharedTarget ? "shared_target" : "interacting_targets";
}

const char* to_string(SupportPairs s) {
  return s == SupportPairs::TrainPositives ? "train_positives" : "train_all";
}

SupportPairs parse_support_pairs(const std::string& name) {
  if (name == "train_positives") return SupportPairs::TrainPositives;
  if (name == "train_all") return SupportPairs::TrainAll;
  throw ConfigError("unknown support pair set '" + name + "'");
}

RelationalFeatureSpace::RelationalFeatureSpace(std::vector<FeatureTemplate> templates,
                                               std::vector<std::size_t> support,
                                               std::size_t min_support)
    : min_support_(min_support) {
  std::vector<std::size_t> order(templates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = templates[a];
    const auto& y = templates[b];
    if (x.kind != y.kind) return x.kind < y.kind;
    if (x.first.index != y.first.index) return x.first.index < y.first.index;
    return x.second.index < y.second.index;
  });
  for (std::size_t i : order) {
    index_.emplace(templates[i].key(), static_cast<std::uint32_t>(templates_.size()));
    templates_.push_back(templates[i]);
    support_.push_back(support.at(i));
  }
}

std::optional<std::uint32_t> RelationalFeatureSpace::index_of(
    const FeatureTemplate& t) const {
  auto it = index_.find(t.key());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t RelationalFeatureSpace::hash() const {
  Fnv1a h;
  h.update_u64(min_support_);
  h.update_u64(templates_.size());
  for (const FeatureTemplate& t : templates_) h.update_u64(t.key());
  return h.digest();
}

std::vector<DrugPair> support_pairs(std::span<const Example> train,
                                    SupportPairs which) {
  std::vector<DrugPair> out;
  std::unordered_set<std::uint64_t> seen;
  for (const Example& e : train) {
    if (which == SupportPairs::TrainPositives && !e.positive()) continue;
    if (seen.insert(e.pair().key()).second) out.push_back(e.pair());
  }
  return out;
}

std::unordered_map<std::uint64_t, std::size_t> count_templates(
    const KnowledgeGraph& g, std::span<const DrugPair> pairs) {
  std::unordered_map<std::uint64_t, std::size_t> counts;
  for (const DrugPair& p : pairs) {
    for_each_match(g, p.first, p.second,
                   [&](const FeatureTemplate& t) { ++counts[t.key()]; });
  }
  return counts;
}

RelationalFeatureSpace enumerate_templates(const KnowledgeGraph& g,
                                           std::span<const DrugPair> pairs,
                                           std::size_t min_support) {
  if (min_support < 1) throw ConfigError("min_support must be at least 1");
  std::vector<FeatureTemplate> templates;
  std::vector<std::size_t> support;
  for (const auto& [key, count] : count_templates(g, pairs)) {
    if (count < min_support) continue;
    const bool interacting = (key >> 63) != 0;
    const auto first = static_cast<std::uint32_t>((key >> 32) & 0x7fffffffu);
    const auto second = static_cast<std::uint32_t>(key & 0xffffffffu);
    templates.push_back(FeatureTemplate{
        interacting ? TemplateKind::InteractingTargets : TemplateKind::SharedTarget,
        g.entity(first), g.entity(second)});
    support.push_back(count);
  }
  return RelationalFeatureSpace(std::move(templates), std::move(support), min_support);
}

FeatureVector featurize(const RelationalFeatureSpace& space,
                        const KnowledgeGraph& g, EntityId h, EntityId t) {
  FeatureVector fv;
  if (space.empty()) return fv;
  for_each_match(g, h, t, [&](const FeatureTemplate& ft) {
    if (auto i = space.index_of(ft)) fv.indices.push_back(*i);
  });
  std::sort(fv.indices.begin(), fv.indices.end());
  fv.indices.erase(std::unique(fv.indices.begin(), fv.indices.end()),
                   fv.indices.end());
  return fv;
}

const FeatureVector& FeatureCache::get(EntityId h, EntityId t) const {
  const std::uint64_t key = DrugPair::canonical(h, t).key();
  {
    std::shared_lock lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const DrugPair p = DrugPair::canonical(h, t);
  FeatureVector fv = featurize(space_, graph_, p.first, p.second);
  std::unique_lock lock(mutex_);
  return memo_.try_emplace(key, std::move(fv)).first->second;
}

void write_feature_manifest(std::ostream& os, const RelationalFeatureSpace& space,
                            const KnowledgeGraph& g) {
  os << "# polyse-features v1 min_support=" << space.min_support()
     << " size=" << space.size() << " hash=" << hex64(space.hash()) << '\n';
  for (std::uint32_t i = 0; i < space.size(); ++i) {
    const FeatureTemplate& t = space.at(i);
    os << i << ' ' << to_string(t.kind) << ' ' << g.entity_key(t.first);
    if (t.kind == TemplateKind::InteractingTargets) os << ',' << g.entity_key(t.second);
    os << ' ' << space.support(i) << '\n';
  }
}

void write_feature_manifest(const std::filesystem::path& path,
                            const RelationalFeatureSpace& space,
                            const KnowledgeGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_feature_manifest(out, space, g);
}

RelationalFeatureSpace read_feature_manifest(const std::filesystem::path& path,
                                             const KnowledgeGraph& g) {
  std::ifstream in(path, std::ios::binary);
  const std::string file = path.string();
  if (!in) throw ParseError(file, 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# polyse-features v1 ", 0) != 0) {
    throw ParseError(file, 1, "missing feature manifest header");
  }
  std::size_t min_support = 0;
  {
    const auto pos = line.find("min_support=");
    if (pos == std::string::npos) throw ParseError(file, 1, "missing min_support");
    min_support = std::stoull(line.substr(pos + 12));
  }
  auto protein = [&](const std::string& key, std::size_t line_no) {
    const auto e = g.find_entity(key);
    if (!e || e->kind != EntityKind::Protein) {
      throw ParseError(file, line_no, "unknown protein '" + key + "'");
    }
    return *e;
  };
  std::vector<FeatureTemplate> templates;
  std::vector<std::size_t> support;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t index = 0;
    std::size_t count = 0;
    std::string kind;
    std::string proteins;
    if (!(row >> index >> kind >> proteins >> count) || index != templates.size()) {
      throw ParseError(file, line_no, "malformed feature row");
    }
    if (kind == "shared_target") {
      templates.push_back(FeatureTemplate::shared(protein(proteins, line_no)));
    } else if (kind == "interacting_targets") {
      const auto comma = proteins.find(',');
      if (comma == std::string::npos) throw ParseError(file, line_no, "expected protein pair");
      templates.push_back(FeatureTemplate::interacting(
          protein(proteins.substr(0, comma), line_no),
          protein(proteins.substr(comma + 1), line_no)));
    } else {
      throw ParseError(file, line_no, "unknown template kind '" + kind + "'");
    }
    support.push_back(count);
  }
  RelationalFeatureSpace space(templates, std::move(support), min_support);
  // Rows must already be in canonical order for indices to be stable.
  for (std::uint32_t i = 0; i < templates.size(); ++i) {
    if (space.index_of(templates[i]) != i) {
      throw ParseError(file, i + 2, "feature rows out of canonical order");
    }
  }
  return space;
}

}  // namespace polyse

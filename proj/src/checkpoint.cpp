#include "polyse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "polyse/error.hpp"

namespace polyse {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kModelMagic[8] = {'P', 'S', 'E', 'C', 'K', 'P', 'T', '\0'};
constexpr char kBaselineMagic[8] = {'P', 'S', 'E', 'B', 'A', 'S', 'E', '\0'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot write " + path.string());
  }
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <typename T>
  void put_all(const std::vector<T>& v) {
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(T)));
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw Error("write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : file_(path.string()), in_(path, std::ios::binary) {
    if (!in_) throw ParseError(file_, 0, "cannot open checkpoint");
  }
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) fail("truncated checkpoint");
    return v;
  }
  template <typename T>
  void get_all(std::vector<T>& v) {
    in_.read(reinterpret_cast<char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(T)));
    if (!in_) fail("truncated checkpoint");
  }
  void expect_magic(const char (&magic)[8]) {
    char buf[8];
    in_.read(buf, 8);
    if (!in_ || std::memcmp(buf, magic, 8) != 0) fail("bad magic");
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) { throw ParseError(file_, 0, what); }

 private:
  std::string file_;
  std::ifstream in_;
};

template <typename Id>
std::vector<std::uint32_t> ids_of(std::span<const Id> ids) {
  std::vector<std::uint32_t> out;
  out.reserve(ids.size());
  for (const Id& id : ids) out.push_back(id.index);
  return out;
}

std::vector<EntityId> entities_from(Reader& r, const KnowledgeGraph& g, std::size_t n) {
  std::vector<std::uint32_t> raw(n);
  r.get_all(raw);
  std::vector<EntityId> out;
  for (std::uint32_t i : raw) {
    if (i >= g.entity_count()) r.fail("entity id not in graph");
    out.push_back(g.entity(i));
  }
  return out;
}

std::vector<RelationId> relations_from(Reader& r, const KnowledgeGraph& g, std::size_t n) {
  std::vector<std::uint32_t> raw(n);
  r.get_all(raw);
  std::vector<RelationId> out;
  for (std::uint32_t i : raw) {
    if (i >= g.relation_count() ||
        g.relation(i).kind != RelationKind::PolypharmacySideEffect) {
      r.fail("relation id not a side effect of this graph");
    }
    out.push_back(g.relation(i));
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const CheckpointInfo& info) {
  Writer w(path);
  w.bytes(kModelMagic, 8);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.dim()));
  w.put<std::uint64_t>(params.entities().size());
  w.put<std::uint64_t>(params.relations().size());
  w.put<std::uint64_t>(params.n_features());
  w.put<std::uint64_t>(info.feature_space_hash);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(info.mode));
  w.put_all(ids_of(params.entities()));
  w.put_all(ids_of(params.relations()));
  w.put_all(params.entity_table());
  w.put_all(params.embed_table());
  w.put_all(params.rel_table());
  w.finish();
}

ModelParams load_checkpoint(const std::filesystem::path& path, const KnowledgeGraph& g,
                            std::uint64_t expected_space_hash, CheckpointInfo* info) {
  Reader r(path);
  r.expect_magic(kModelMagic);
  CheckpointInfo meta;
  meta.version = r.get<std::uint32_t>();
  if (meta.version != kCheckpointVersion) r.fail("unsupported checkpoint version");
  const auto dim = r.get<std::uint32_t>();
  const auto n_entities = r.get<std::uint64_t>();
  const auto n_relations = r.get<std::uint64_t>();
  const auto n_features = r.get<std::uint64_t>();
  meta.feature_space_hash = r.get<std::uint64_t>();
  const auto mode = r.get<std::uint32_t>();
  if (mode > 1) r.fail("bad score mode");
  meta.mode = static_cast<ScoreMode>(mode);
  if (meta.feature_space_hash != expected_space_hash) {
    throw Error("checkpoint " + path.string() + " was trained against feature space " +
                hex64(meta.feature_space_hash) + ", current space is " +
                hex64(expected_space_hash));
  }
  if (n_entities > g.entity_count() || n_relations > g.relation_count()) {
    r.fail("checkpoint larger than graph");
  }
  auto entities = entities_from(r, g, n_entities);
  auto relations = relations_from(r, g, n_relations);
  ModelParams p(dim, std::move(entities), std::move(relations), n_features);
  r.get_all(p.entity_table());
  r.get_all(p.embed_table());
  r.get_all(p.rel_table());
  r.expect_end();
  if (info) *info = meta;
  return p;
}

void save_baseline(const std::filesystem::path& path, const BaselineParams& params,
                   const BaselineVocabulary& vocab) {
  Writer w(path);
  w.bytes(kBaselineMagic, 8);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(params.dim);
  w.put<std::uint64_t>(params.relations.size());
  w.put<std::uint64_t>(vocab.size());
  w.put_all(ids_of(vocab.terms()));
  w.put_all(ids_of(std::span<const RelationId>(params.relations)));
  w.put_all(params.weights);
  w.put_all(params.bias);
  w.finish();
}

BaselineParams load_baseline(const std::filesystem::path& path, const KnowledgeGraph& g,
                             BaselineVocabulary* vocab) {
  Reader r(path);
  r.expect_magic(kBaselineMagic);
  if (r.get<std::uint32_t>() != kCheckpointVersion) r.fail("unsupported checkpoint version");
  const auto dim = r.get<std::uint64_t>();
  const auto n_relations = r.get<std::uint64_t>();
  const auto n_terms = r.get<std::uint64_t>();
  if (n_terms > g.entity_count() || n_relations > g.relation_count() || dim != 2 * n_terms) {
    r.fail("inconsistent baseline header");
  }
  auto terms = entities_from(r, g, n_terms);
  auto relations = relations_from(r, g, n_relations);
  BaselineParams p(dim, std::move(relations));
  r.get_all(p.weights);
  r.get_all(p.bias);
  r.expect_end();
  if (vocab) *vocab = BaselineVocabulary(std::move(terms));
  return p;
}

}  // namespace polyse

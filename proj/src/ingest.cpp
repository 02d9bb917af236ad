#include "polyse/ingest.hpp"

#include <fstream>
#include <ostream>
#include <span>
#include <stdexcept>

#include "polyse/error.hpp"

namespace polyse {

namespace {

struct Table {
  std::string file;
  std::ifstream in;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::vector<std::size_t> columns;  // requested column -> position
  char delimiter = ',';

  // False at end of file. Blank lines are ignored.
  bool next(std::vector<std::string>& out) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> fields;
      try {
        fields = split_record(line, delimiter);
      } catch (const std::runtime_error& e) {
        throw ParseError(file, line_no, e.what());
      }
      if (fields.size() != width) {
        throw ParseError(file, line_no,
                         "expected " + std::to_string(width) + " fields, got " +
                             std::to_string(fields.size()));
      }
      out.clear();
      for (std::size_t c : columns) {
        if (fields[c].empty()) {
          throw ParseError(file, line_no, "empty value in required column");
        }
        out.push_back(std::move(fields[c]));
      }
      return true;
    }
    return false;
  }
};

Table open_table(const std::filesystem::path& path,
                 std::span<const std::string> wanted, char delimiter) {
  Table t;
  t.file = path.string();
  t.delimiter = delimiter;
  t.in.open(path);
  if (!t.in) throw ParseError(t.file, 0, "cannot open file");
  std::string header;
  if (!std::getline(t.in, header)) throw ParseError(t.file, 1, "missing header row");
  t.line_no = 1;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  // Tolerate a UTF-8 byte order mark.
  if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  const auto names = split_record(header, delimiter);
  t.width = names.size();
  for (const std::string& w : wanted) {
    std::size_t pos = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == w) {
        pos = i;
        break;
      }
    }
    if (pos == names.size()) {
      throw ParseError(t.file, 1, "header lacks column '" + w + "'");
    }
    t.columns.push_back(pos);
  }
  return t;
}

class Loader {
 public:
  explicit Loader(const IngestSchema& schema) : schema_(schema) {}

  void add(const Table& table, const Triple& t) {
    if (t.head == t.tail && schema_.skip_self_loops) {
      ++result.self_loops_skipped;
      return;
    }
    try {
      if (!result.graph.add_triple(t)) ++result.duplicate_rows;
    } catch (const SchemaViolation& e) {
      throw SchemaViolation(table.file + ":" + std::to_string(table.line_no) +
                            ": " + e.what());
    }
  }

  EntityId intern(const Table& table, const std::string& key, EntityKind kind) {
    try {
      return result.graph.intern_entity(key, kind);
    } catch (const KindConflict& e) {
      throw KindConflict(table.file + ":" + std::to_string(table.line_no) +
                         ": " + e.what());
    }
  }

  IngestResult result;

 private:
  const IngestSchema& schema_;
};

}  // namespace

std::vector<std::string> split_record(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw std::runtime_error("text after closing quote");
      cur.push_back(c);
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

const std::array<StatField, 8>& stat_fields() {
  static const std::array<StatField, 8> fields{{
      {"n_proteins", &GraphStats::n_proteins},
      {"n_drugs", &GraphStats::n_drugs},
      {"n_ppi", &GraphStats::n_ppi},
      {"n_drug_drug", &GraphStats::n_drug_drug},
      {"n_drug_target", &GraphStats::n_drug_target},
      {"n_mono_assoc", &GraphStats::n_mono_assoc},
      {"n_distinct_mono", &GraphStats::n_distinct_mono},
      {"n_distinct_poly", &GraphStats::n_distinct_poly},
  }};
  return fields;
}

GraphStats decagon_reference_stats() {
  GraphStats s;
  s.n_proteins = 19089;
  s.n_drugs = 645;
  s.n_ppi = 715612;
  s.n_drug_drug = 4649441;
  s.n_drug_target = 11501;
  s.n_mono_assoc = 174977;
  s.n_distinct_mono = 10184;
  s.n_distinct_poly = 963;
  return s;
}

IngestResult ingest_dataset(const DatasetPaths& paths,
                            const IngestSchema& schema) {
  Loader loader(schema);
  KnowledgeGraph& g = loader.result.graph;
  const char d = schema.delimiter;
  std::vector<std::string> row;

  {
    Table t = open_table(paths.combo, schema.combo_columns, d);
    while (t.next(row)) {
      const EntityId a = loader.intern(t, row[0], EntityKind::Drug);
      const EntityId b = loader.intern(t, row[1], EntityKind::Drug);
      RelationId r;
      try {
        r = g.intern_relation(row[2], RelationKind::PolypharmacySideEffect);
      } catch (const Error& e) {
        throw ParseError(t.file, t.line_no, e.what());
      }
      if (g.relation_label(r) == g.relation_key(r)) g.set_relation_label(r, row[3]);
      loader.add(t, Triple{a, r, b});
    }
  }
  {
    Table t = open_table(paths.targets, schema.target_columns, d);
    const RelationId r = g.intern_relation(kHasTargetKey, RelationKind::HasTarget);
    while (t.next(row)) {
      const EntityId drug = loader.intern(t, row[0], EntityKind::Drug);
      const EntityId protein = loader.intern(t, row[1], EntityKind::Protein);
      loader.add(t, Triple{drug, r, protein});
    }
  }
  {
    Table t = open_table(paths.ppi, schema.ppi_columns, d);
    const RelationId r =
        g.intern_relation(kInteractsWithKey, RelationKind::InteractsWith);
    while (t.next(row)) {
      const EntityId p = loader.intern(t, row[0], EntityKind::Protein);
      const EntityId q = loader.intern(t, row[1], EntityKind::Protein);
      loader.add(t, Triple{p, r, q});
    }
  }
  {
    Table t = open_table(paths.mono, schema.mono_columns, d);
    const RelationId r =
        g.intern_relation(kMonoSideEffectKey, RelationKind::MonoSideEffect);
    while (t.next(row)) {
      const EntityId drug = loader.intern(t, row[0], EntityKind::Drug);
      const EntityId effect = loader.intern(t, row[1], EntityKind::MonoEffect);
      loader.add(t, Triple{drug, r, effect});
    }
  }

  g.freeze();
  loader.result.stats = compute_stats(g);
  return std::move(loader.result);
}

GraphStats compute_stats(const KnowledgeGraph& g) {
  GraphStats s;
  s.n_proteins = g.entities_of(EntityKind::Protein).size();
  s.n_drugs = g.entities_of(EntityKind::Drug).size();
  s.n_distinct_mono = g.entities_of(EntityKind::MonoEffect).size();
  for (std::uint32_t i = 0; i < g.relation_count(); ++i) {
    const RelationId r = g.relation(i);
    const std::size_t n = g.triple_count(r);
    switch (r.kind) {
      case RelationKind::PolypharmacySideEffect:
        s.n_drug_drug += n;
        ++s.n_distinct_poly;
        break;
      case RelationKind::HasTarget: s.n_drug_target += n; break;
      case RelationKind::InteractsWith: s.n_ppi += n; break;
      case RelationKind::MonoSideEffect: s.n_mono_assoc += n; break;
    }
  }
  return s;
}

std::vector<StatMismatch> validate_stats(const GraphStats& actual,
                                         const GraphStats& expected) {
  std::vector<StatMismatch> out;
  for (const StatField& f : stat_fields()) {
    if (actual.*f.member != expected.*f.member) {
      out.push_back({f.name, expected.*f.member, actual.*f.member});
    }
  }
  return out;
}

void write_stats_report(std::ostream& os, const GraphStats& actual,
                        const GraphStats& expected) {
  for (const StatField& f : stat_fields()) {
    os << f.name << ' ' << expected.*f.member << ' ' << actual.*f.member << '\n';
  }
}

}  // namespace polyse

#include <doctest.h>

#include <sstream>

#include "polyse/error.hpp"
#include "polyse/ingest.hpp"
#include "tempdir.hpp"

using namespace polyse;

namespace {

const char* kCombo =
    "STITCH 1,STITCH 2,Polypharmacy Side Effect,Side Effect Name\n"
    "CID1,CID2,C001,\"pain, chronic\"\n"
    "CID2,CID1,C001,\"pain, chronic\"\n"
    "CID1,CID3,C002,nausea\n"
    "CID3,CID3,C002,nausea\n";
const char* kTargets = "STITCH,Gene\nCID1,G1\nCID2,G2\nCID4,G1\n";
const char* kPpi = "Gene 1,Gene 2\nG1,G2\nG2,G3\n";
const char* kMono =
    "STITCH,Individual Side Effect,Side Effect Name\n"
    "CID1,M1,headache\nCID5,M1,headache\nCID5,M2,rash\n";

DatasetPaths write_fixture(const TempDir& dir, const std::string& ppi = kPpi,
                           const std::string& combo = kCombo) {
  return DatasetPaths{dir.write("ppi.csv", ppi), dir.write("targets.csv", kTargets),
                      dir.write("combo.csv", combo), dir.write("mono.csv", kMono)};
}

}  // namespace

TEST_CASE("fixture files produce hand-counted stats") {
  TempDir dir;
  const IngestResult r = ingest_dataset(write_fixture(dir), IngestSchema{});
  GraphStats want;
  want.n_proteins = 3;
  want.n_drugs = 5;
  want.n_ppi = 2;
  want.n_drug_drug = 2;
  want.n_drug_target = 3;
  want.n_mono_assoc = 3;
  want.n_distinct_mono = 2;
  want.n_distinct_poly = 2;
  CHECK(r.stats == want);
  CHECK(validate_stats(r.stats, want).empty());
  CHECK(r.self_loops_skipped == 1);
  CHECK(r.duplicate_rows == 1);
  const auto se = r.graph.find_relation("C001");
  REQUIRE(se);
  CHECK(r.graph.relation_label(*se) == "pain, chronic");
  CHECK(r.graph.frozen());
}

TEST_CASE("header-only PPI file yields no interactions") {
  TempDir dir;
  const IngestResult r = ingest_dataset(write_fixture(dir, "Gene 1,Gene 2\n"), IngestSchema{});
  CHECK(r.stats.n_ppi == 0);
  CHECK(r.stats.n_proteins == 2);
  CHECK(r.stats.n_drug_drug == 2);
}

TEST_CASE("re-ingestion is deterministic") {
  TempDir dir;
  const auto paths = write_fixture(dir);
  const IngestResult a = ingest_dataset(paths, IngestSchema{});
  const IngestResult b = ingest_dataset(paths, IngestSchema{});
  CHECK(a.stats == b.stats);
  CHECK(graph_hash(a.graph) == graph_hash(b.graph));
  for (std::uint32_t i = 0; i < a.graph.entity_count(); ++i) {
    CHECK(a.graph.entity_key(a.graph.entity(i)) == b.graph.entity_key(b.graph.entity(i)));
  }
  std::size_t poly = 0;
  for (RelationId r : a.graph.relations_of(RelationKind::PolypharmacySideEffect)) {
    poly += a.graph.triple_count(r);
  }
  CHECK(poly == a.stats.n_drug_drug);
}

TEST_CASE("validate_stats flags exactly the differing fields") {
  const GraphStats ref = decagon_reference_stats();
  CHECK(validate_stats(ref, ref).empty());
  GraphStats off = ref;
  off.n_drugs = 644;
  const auto m = validate_stats(off, ref);
  REQUIRE(m.size() == 1);
  CHECK(m[0].field == "n_drugs");
  CHECK(m[0].expected == 645);
  CHECK(m[0].actual == 644);

  GraphStats perturbed = ref;
  perturbed.n_ppi += 1;
  perturbed.n_distinct_poly -= 3;
  const auto m2 = validate_stats(perturbed, ref);
  REQUIRE(m2.size() == 2);
  CHECK(m2[0].field == "n_ppi");
  CHECK(m2[1].field == "n_distinct_poly");
}

TEST_CASE("stats report lists expected and actual per field") {
  std::ostringstream os;
  GraphStats s;
  s.n_drugs = 3;
  write_stats_report(os, s, decagon_reference_stats());
  const std::string text = os.str();
  CHECK(text.find("n_proteins 19089 0\n") == 0);
  CHECK(text.find("n_drugs 645 3\n") != std::string::npos);
}

TEST_CASE("malformed input reports file and line") {
  TempDir dir;
  SUBCASE("wrong field count") {
    const auto paths = write_fixture(dir, "Gene 1,Gene 2\nG1,G2\nG3\n");
    try {
      ingest_dataset(paths, IngestSchema{});
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.file() == paths.ppi.string());
    }
  }
  SUBCASE("missing column") {
    const auto paths = write_fixture(dir, "Gene A,Gene 2\nG1,G2\n");
    CHECK_THROWS_AS(ingest_dataset(paths, IngestSchema{}), ParseError);
  }
  SUBCASE("unterminated quote") {
    const auto paths = write_fixture(
        dir, kPpi, "STITCH 1,STITCH 2,Polypharmacy Side Effect,Side Effect Name\nCID1,CID2,C1,\"x\n");
    CHECK_THROWS_AS(ingest_dataset(paths, IngestSchema{}), ParseError);
  }
  SUBCASE("drug key reused as protein") {
    const auto paths = write_fixture(dir, "Gene 1,Gene 2\nCID1,G2\n");
    CHECK_THROWS_AS(ingest_dataset(paths, IngestSchema{}), KindConflict);
  }
  SUBCASE("self-loops rejected when not skipped") {
    IngestSchema schema;
    schema.skip_self_loops = false;
    CHECK_THROWS_AS(ingest_dataset(write_fixture(dir), schema), SchemaViolation);
  }
}

TEST_CASE("header mapping tolerates reordering, BOM, CRLF and other delimiters") {
  TempDir dir;
  const DatasetPaths paths{
      dir.write("ppi.tsv", "\xEF\xBB\xBFextra\tGene 2\tGene 1\r\nx\tG2\tG1\r\n"),
      dir.write("targets.tsv", "Gene\tSTITCH\nG1\tCID1\n"),
      dir.write("combo.tsv",
                "Side Effect Name\tPolypharmacy Side Effect\tSTITCH 2\tSTITCH 1\nn\tC1\tCID2\tCID1\n"),
      dir.write("mono.tsv", "Side Effect Name\tIndividual Side Effect\tSTITCH\nh\tM1\tCID1\n")};
  IngestSchema schema;
  schema.delimiter = '\t';
  const IngestResult r = ingest_dataset(paths, schema);
  CHECK(r.stats.n_ppi == 1);
  CHECK(r.stats.n_drug_target == 1);
  CHECK(r.stats.n_drug_drug == 1);
  CHECK(r.stats.n_mono_assoc == 1);
  CHECK(r.graph.find_entity("G1")->kind == EntityKind::Protein);
}

TEST_CASE("split_record handles quotes") {
  CHECK(split_record("a,\"b,c\",d", ',') == std::vector<std::string>{"a", "b,c", "d"});
  CHECK(split_record("\"say \"\"hi\"\"\",x", ',') == std::vector<std::string>{"say \"hi\"", "x"});
  CHECK(split_record("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
  CHECK_THROWS(split_record("\"a\"b", ','));
}

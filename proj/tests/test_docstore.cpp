#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ambidoc/dataset.hpp"
#include "ambidoc/docstore.hpp"
#include "ambidoc/error.hpp"
#include "support/fixtures.hpp"

using namespace ambidoc;
using namespace ambidoc::docs;
using ambidoc::testing::fixture_db;
using ambidoc::testing::fixture_file;
using ambidoc::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DocEntry entry(std::string id, DocKind kind, std::string table, std::optional<std::string> column,
               std::string text, Provenance prov) {
  return DocEntry{std::move(id), kind, Scope{std::move(table), std::move(column)}, std::move(text), prov};
}

DocEntry draft(DocKind kind, std::string table, std::optional<std::string> column, std::string text) {
  Scope scope{std::move(table), std::move(column)};
  return DocEntry{draft_id(kind, scope), kind, scope, std::move(text), Provenance::kDraft};
}

std::string field_of(const std::string& json) {
  try {
    parse_docs(json);
  } catch (const ParseError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("fixture file loads the documented soccer entries") {
  const DocSet set = load_docs(fixture_file("docs/soccer.docs.json"));
  CHECK(set.database == "soccer");
  const auto it = std::find_if(set.entries.begin(), set.entries.end(),
                               [](const DocEntry& e) { return e.text == "bwd means Bet&Win draw odds."; });
  REQUIRE(it != set.entries.end());
  CHECK(it->kind == DocKind::kNameDescription);
  CHECK(it->scope == Scope{"football_data", std::string("bwd")});
  CHECK(it->provenance == Provenance::kHuman);
  CHECK(set.queries.size() == 25);
  CHECK(set.queries[0].gold_sql ==
        "SELECT YEAR FROM betfront GROUP BY YEAR ORDER BY count(*) DESC LIMIT 1");
}

TEST_CASE("fixture scopes all exist in the schema") {
  for (const char* name : {"soccer", "crime"}) {
    const DocSet set = load_docs(fixture_file((std::string("docs/") + name + ".docs.json").c_str()));
    const Database db = Database::open(fixture_db(name));
    CHECK(dangling_scopes(set, db.extract_schema()).empty());
    validate(set);
  }
}

TEST_CASE("round trip through save and load") {
  TempDir tmp;
  const auto src = fixture_file("docs/crime.docs.json");
  const DocSet set = load_docs(src);
  save_docs(set, tmp / "crime.docs.json");
  CHECK(load_docs(tmp / "crime.docs.json") == set);
  const std::string once = slurp(tmp / "crime.docs.json");
  save_docs(load_docs(tmp / "crime.docs.json"), tmp / "again.json");
  CHECK(slurp(tmp / "again.json") == once);
  // The committed fixtures are already normalized.
  CHECK(once == slurp(src));
}

TEST_CASE("empty doc set round trip") {
  TempDir tmp;
  DocSet empty;
  empty.database = "nothing";
  save_docs(empty, tmp / "e.json");
  const DocSet back = load_docs(tmp / "e.json");
  CHECK(back.entries.empty());
  CHECK(back.queries.empty());
  CHECK(back == empty);
}

TEST_CASE("parse errors carry a field") {
  const std::string bad_scope = R"({"format":"ambidoc-docs/1","database":"d","entries":[
    {"id":"a","kind":"coverage","table":"t","column":"c","text":"x","provenance":"human"}],"queries":[]})";
  CHECK(field_of(bad_scope) == "entries[0].column");

  const std::string missing_column = R"({"format":"ambidoc-docs/1","database":"d","entries":[
    {"id":"a","kind":"name_description","table":"t","text":"x","provenance":"human"}],"queries":[]})";
  CHECK(field_of(missing_column) == "entries[0].column");

  const std::string empty_text = R"({"format":"ambidoc-docs/1","database":"d","entries":[
    {"id":"a","kind":"granularity","table":"t","text":"","provenance":"human"}],"queries":[]})";
  CHECK(field_of(empty_text) == "entries[0].text");

  const std::string same_text = R"({"format":"ambidoc-docs/1","database":"d","entries":[],"queries":[
    {"id":"q","original":"o","term_disambiguated":"o","gold_sql":"SELECT 1"}]})";
  CHECK(field_of(same_text) == "queries[0].term_disambiguated");

  const std::string dup = R"({"format":"ambidoc-docs/1","database":"d","entries":[
    {"id":"a","kind":"granularity","table":"t","text":"x","provenance":"human"},
    {"id":"a","kind":"coverage","table":"t","text":"y","provenance":"human"}],"queries":[]})";
  CHECK(field_of(dup) == "entries[1].id");

  try {
    parse_docs("{\n  \"format\": \"ambidoc-docs/1\",\n  oops\n}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("unknown kind") {
  const std::string json = R"({"format":"ambidoc-docs/1","database":"d","entries":[
    {"id":"a","kind":"lineage","table":"t","text":"x","provenance":"human"}],"queries":[]})";
  try {
    parse_docs(json);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownKind);
  }
  CHECK(parse_kind("Coverage") == DocKind::kCoverage);
}

TEST_CASE("merge keeps human entries") {
  DocSet existing;
  existing.database = "soccer";
  existing.entries.push_back(entry("vc-match", DocKind::kValueConsistency, "betfront", "match",
                                   "Matches are 'home - away'.", Provenance::kHuman));
  const auto merged = merge_draft(
      existing, {draft(DocKind::kValueConsistency, "betfront", "match", "drafted")});
  CHECK(merged == existing);
}

TEST_CASE("merge into empty appends drafts") {
  DocSet empty;
  empty.database = "soccer";
  const std::vector<DocEntry> drafts = {
      draft(DocKind::kCoverage, "betfront", std::nullopt, "c"),
      draft(DocKind::kGranularity, "betfront", std::nullopt, "g"),
      draft(DocKind::kValueConsistency, "betfront", "year", "v"),
  };
  const auto merged = merge_draft(empty, drafts);
  CHECK(merged.entries == drafts);
}

TEST_CASE("newer draft replaces older draft in place") {
  DocSet existing;
  existing.database = "soccer";
  existing.entries.push_back(draft(DocKind::kCoverage, "betfront", std::nullopt, "old"));
  existing.entries.push_back(entry("h", DocKind::kGranularity, "betfront", std::nullopt, "human",
                                   Provenance::kHuman));
  const auto merged =
      merge_draft(existing, {draft(DocKind::kCoverage, "betfront", std::nullopt, "new")});
  REQUIRE(merged.entries.size() == 2);
  CHECK(merged.entries[0].text == "new");
  CHECK(merged.entries[1] == existing.entries[1]);
}

TEST_CASE("merge is idempotent") {
  const DocSet base = load_docs(fixture_file("docs/soccer.docs.json"));
  const std::vector<DocEntry> drafts = {
      draft(DocKind::kValueConsistency, "betfront", "match", "d1"),
      draft(DocKind::kValueConsistency, "betfront", "country", "d2"),
      draft(DocKind::kCoverage, "football_data", std::nullopt, "d3"),
  };
  const auto once = merge_draft(base, drafts);
  CHECK(merge_draft(once, drafts) == once);
  CHECK(once.entries.size() == base.entries.size() + 1);
}

TEST_CASE("merge rejects human entries as drafts") {
  CHECK_THROWS_AS(merge_draft({}, {entry("x", DocKind::kCoverage, "t", std::nullopt, "x",
                                         Provenance::kHuman)}),
                  Error);
}

TEST_CASE("docs_for filters by kind and scope") {
  const DocSet set = load_docs(fixture_file("docs/soccer.docs.json"));
  const Database db = Database::open(fixture_db("soccer"));
  const Schema schema = db.extract_schema();

  const auto vc = docs_for(set, DocKind::kValueConsistency, {"betfront"},
                           std::set<ColumnRef>{{"betfront", "match"}}, &schema);
  REQUIRE(vc.size() == 1);
  CHECK(vc[0].id == "vc-match");

  CHECK(docs_for(set, DocKind::kCoverage, {}, std::nullopt).empty());

  const auto cov = docs_for(set, DocKind::kCoverage, {"football_data"},
                            std::set<ColumnRef>{{"football_data", "year"}});
  REQUIRE(cov.size() == 1);
  CHECK(cov[0].id == "cov-football-data");

  // Schema order: betfront columns by position, then football_data.
  const auto nd = docs_for(set, DocKind::kNameDescription, {"betfront", "football_data"},
                           std::nullopt, &schema);
  std::vector<std::string> ids;
  for (const auto& e : nd) ids.push_back(e.id);
  CHECK(ids == std::vector<std::string>{"nd-competion", "nd-home-opening", "nd-draw-closing",
                                        "nd-div", "nd-bwh", "nd-bwd", "nd-bwa"});
}

TEST_CASE("docs_for never leaves the requested kind or tables") {
  const DocSet set = load_docs(fixture_file("docs/soccer.docs.json"));
  for (DocKind kind : {DocKind::kNameDescription, DocKind::kValueConsistency, DocKind::kCoverage,
                       DocKind::kGranularity}) {
    for (const auto& e : docs_for(set, kind, {"BETFRONT"}, std::nullopt)) {
      CHECK(e.kind == kind);
      CHECK(e.scope.table == "betfront");
    }
  }
}

TEST_CASE("naming helpers") {
  CHECK(docs_file_name("soccer") == "soccer.docs.json");
  CHECK(draft_id(DocKind::kCoverage, {"betfront", std::nullopt}) == "draft/coverage/betfront");
  CHECK(to_string(DocKind::kNameDescription) == "NameDescription");
  CHECK(parse_kind("name_description") == DocKind::kNameDescription);
  CHECK(to_string(Provenance::kDraft) == "draft");
}

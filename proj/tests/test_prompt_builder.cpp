#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ambidoc/dataset.hpp"
#include "ambidoc/docstore.hpp"
#include "ambidoc/error.hpp"
#include "ambidoc/prompt_builder.hpp"
#include "support/fixtures.hpp"

using namespace ambidoc;
using namespace ambidoc::prompt;
using ambidoc::docs::DocKind;
using ambidoc::testing::fixture_db;
using ambidoc::testing::fixture_file;
using ambidoc::testing::TempDir;

namespace {

struct Soccer {
  Database db = Database::open(fixture_db("soccer"));
  Schema schema = db.extract_schema();
  docs::DocSet docs = docs::load_docs(fixture_file("docs/soccer.docs.json"));
  std::vector<RowSample> samples = collect_samples(db, schema);

  const docs::QuerySpec& example() const { return docs.queries.at(0); }
};

bool has_kind(const Prompt& p, DocKind kind) {
  return std::any_of(p.doc_blocks.begin(), p.doc_blocks.end(),
                     [&](const DocBlock& b) { return b.kind == kind; });
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("level names round trip") {
  for (DocLevel l : all_doc_levels()) CHECK(parse_doc_level(to_string(l)) == l);
  for (QueryLevel l : all_query_levels()) CHECK(parse_query_level(to_string(l)) == l);
  CHECK(all_doc_levels().size() == 6);
  CHECK(all_query_levels().size() == 3);
  CHECK_THROWS_AS(parse_doc_level("PlusEverything"), Error);
}

TEST_CASE("query disambiguation levels") {
  const Soccer s;
  const auto& q = s.example();
  CHECK(apply_query_disambiguation(q, QueryLevel::kOriginal) == "Which year has the most matches?");
  CHECK(apply_query_disambiguation(q, QueryLevel::kOutputSchemaOnly) ==
        "Which year has the most matches? The output must only contain the year.");
  CHECK(apply_query_disambiguation(q, QueryLevel::kFullyDisambiguated) ==
        "In which year did the most matches take place? The output must only contain the year.");

  docs::QuerySpec bare;
  bare.id = "x";
  bare.original_text = "How many?";
  bare.gold_sql = "SELECT 1";
  try {
    apply_query_disambiguation(bare, QueryLevel::kOutputSchemaOnly);
    FAIL("expected MissingDisambiguation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingDisambiguation);
  }
  bare.output_schema_clause = "Return a number.";
  CHECK_THROWS_AS(apply_query_disambiguation(bare, QueryLevel::kFullyDisambiguated), Error);
}

TEST_CASE("lenient column answer parsing") {
  const Soccer s;
  const auto cols = parse_column_answer("year, match, season", s.schema);
  const std::vector<ColumnRef> expected = {
      {"betfront", "year"}, {"betfront", "match"}, {"football_data", "season"}};
  CHECK(cols == expected);

  CHECK(parse_column_answer("Betfront.YEAR", s.schema) == std::vector<ColumnRef>{{"betfront", "year"}});
  CHECK(parse_column_answer("`betfront`.`match`\n- football_data.bwd", s.schema) ==
        std::vector<ColumnRef>{{"betfront", "match"}, {"football_data", "bwd"}});
  // country exists in both tables.
  CHECK(parse_column_answer("country", s.schema) ==
        std::vector<ColumnRef>{{"betfront", "country"}, {"football_data", "country"}});
  // Duplicates collapse.
  CHECK(parse_column_answer("year, betfront.year, YEAR", s.schema).size() == 1);
}

TEST_CASE("column answer fallback and cap") {
  const Soccer s;
  const auto none = parse_column_answer("I am not sure which columns matter.", s.schema);
  const std::vector<ColumnRef> first5 = {{"betfront", "year"},
                                         {"betfront", "datetime"},
                                         {"betfront", "country"},
                                         {"betfront", "competion"},
                                         {"betfront", "match"}};
  CHECK(none == first5);
  const auto seven = parse_column_answer(
      "betfront.match, football_data.season, football_data.league, football_data.home_team, "
      "football_data.away_team, football_data.home_goals, football_data.away_goals",
      s.schema);
  REQUIRE(seven.size() == 5);
  CHECK(seven.front() == ColumnRef{"betfront", "match"});
  CHECK(seven.back() == ColumnRef{"football_data", "away_team"});
}

TEST_CASE("select columns uses one completion round") {
  const Soccer s;
  int calls = 0;
  std::string seen;
  llm::CallbackClient client([&](const llm::CompletionRequest& r) {
    ++calls;
    seen = r.user_text;
    return std::string("year, match, season");
  });
  const auto cols = select_columns("Which year has the most matches?", s.schema, client, {});
  CHECK(calls == 1);
  CHECK(cols.size() == 3);
  CHECK(seen.find("Which year has the most matches?") != std::string::npos);
  CHECK(seen.find("CREATE TABLE betfront") != std::string::npos);
  CHECK(seen.find("up to 5 columns") != std::string::npos);

  llm::CallbackClient failing([](const llm::CompletionRequest&) -> std::string {
    throw Error(ErrorCode::kLlmUnavailable, "down");
  });
  CHECK_THROWS_AS(select_columns("q", s.schema, failing, {}), Error);
}

TEST_CASE("schema only prompt") {
  const Soccer s;
  const Prompt p = assemble_prompt(s.schema, s.docs, DocLevel::kSchemaOnly, QueryLevel::kOriginal,
                                   s.example(), {}, s.samples);
  CHECK(p.doc_blocks.empty());
  CHECK_FALSE(p.sample_block.has_value());
  CHECK(p.selected_columns.empty());
  const std::string text = p.user_text();
  CHECK(text.find("CREATE TABLE betfront") != std::string::npos);
  CHECK(text.find("Question: Which year has the most matches?") != std::string::npos);
  CHECK(text.find("step by step") != std::string::npos);
  CHECK(text.find("Documentation:") == std::string::npos);
  CHECK(text.find("Sample rows:") == std::string::npos);
  // Schema, question, CoT in that order.
  CHECK(text.find("CREATE TABLE") < text.find("Question:"));
  CHECK(text.find("Question:") < text.find("step by step"));
}

TEST_CASE("sample level shows the first five rows") {
  const Soccer s;
  const Prompt p = assemble_prompt(s.schema, s.docs, DocLevel::kPlusSample, QueryLevel::kOriginal,
                                   s.example(), {}, s.samples);
  REQUIRE(p.sample_block.has_value());
  CHECK(p.sample_block->find("First 5 rows of betfront:") != std::string::npos);
  CHECK(p.doc_blocks.empty());
  const std::string first_match = to_text(s.db.sample_rows("betfront", 1).rows[0][4]);
  CHECK(p.sample_block->find(first_match) != std::string::npos);
}

TEST_CASE("family replacement across levels") {
  const Soccer s;
  const std::vector<ColumnRef> cols = {{"betfront", "match"}, {"football_data", "bwd"},
                                       {"football_data", "season"}};
  auto at = [&](DocLevel l) {
    return assemble_prompt(s.schema, s.docs, l, QueryLevel::kFullyDisambiguated, s.example(), cols,
                           s.samples);
  };
  const Prompt nd = at(DocLevel::kPlusNameDesc);
  CHECK_FALSE(nd.sample_block.has_value());
  CHECK(has_kind(nd, DocKind::kNameDescription));
  CHECK(nd.user_text().find("bwd means Bet&Win draw odds.") != std::string::npos);
  // Only selected columns get name descriptions.
  CHECK(nd.user_text().find("bwh means") == std::string::npos);

  const Prompt vc = at(DocLevel::kPlusValueConsistency);
  CHECK_FALSE(vc.sample_block.has_value());
  CHECK_FALSE(has_kind(vc, DocKind::kNameDescription));
  CHECK(has_kind(vc, DocKind::kValueConsistency));
  CHECK(vc.user_text().find("bwd means") == std::string::npos);
  CHECK(vc.user_text().find("Matches are consistently denoted") != std::string::npos);

  const Prompt cov = at(DocLevel::kPlusCoverage);
  CHECK(has_kind(cov, DocKind::kCoverage));
  CHECK_FALSE(has_kind(cov, DocKind::kGranularity));

  const Prompt gran = at(DocLevel::kPlusGranularity);
  CHECK(has_kind(gran, DocKind::kGranularity));
  CHECK(gran.user_text().find("It is not aggregated.") != std::string::npos);
  // Per-column docs, then coverage, then granularity.
  std::vector<int> order;
  for (const auto& b : gran.doc_blocks) order.push_back(static_cast<int>(b.kind));
  CHECK(std::is_sorted(order.begin(), order.end()));
}

TEST_CASE("each level changes only the documented blocks") {
  const Soccer s;
  const std::vector<ColumnRef> cols = {{"betfront", "match"}, {"football_data", "season"}};
  std::optional<Prompt> prev;
  for (DocLevel l : all_doc_levels()) {
    const Prompt p = assemble_prompt(s.schema, s.docs, l, QueryLevel::kOriginal, s.example(), cols,
                                     s.samples);
    if (prev) {
      CAPTURE(to_string(l));
      CHECK(p.schema_block == prev->schema_block);
      CHECK(p.query_text == prev->query_text);
      CHECK(p.cot_instruction == prev->cot_instruction);
      CHECK(p.system_text == prev->system_text);
      // Table-scoped blocks only ever grow.
      std::vector<DocBlock> prev_table, cur_table;
      for (const auto& b : prev->doc_blocks) {
        if (!docs::is_column_scoped(b.kind)) prev_table.push_back(b);
      }
      for (const auto& b : p.doc_blocks) {
        if (!docs::is_column_scoped(b.kind)) cur_table.push_back(b);
      }
      REQUIRE(cur_table.size() >= prev_table.size());
      CHECK(std::equal(prev_table.begin(), prev_table.end(), cur_table.begin()));
      if (l >= DocLevel::kPlusCoverage) {
        // Per-column docs are unchanged once value consistency is in.
        std::vector<DocBlock> a, b;
        for (const auto& x : prev->doc_blocks) {
          if (docs::is_column_scoped(x.kind)) a.push_back(x);
        }
        for (const auto& x : p.doc_blocks) {
          if (docs::is_column_scoped(x.kind)) b.push_back(x);
        }
        CHECK(a == b);
      }
    }
    prev = p;
  }
}

TEST_CASE("exclusivity and column cap hold for every cell") {
  for (const char* name : {"soccer", "crime"}) {
    const Database db = Database::open(fixture_db(name));
    const Schema schema = db.extract_schema();
    const auto set = docs::load_docs(fixture_file((std::string("docs/") + name + ".docs.json").c_str()));
    const auto samples = collect_samples(db, schema);
    int cells = 0;
    for (DocLevel dl : all_doc_levels()) {
      for (QueryLevel ql : all_query_levels()) {
        bool ok = true;
        for (const auto& q : set.queries) {
          // A generous answer: every column name, which the cap must trim.
          std::string answer;
          for (const auto& t : schema.tables) {
            for (const auto& c : t.columns) answer += t.name + "." + c.name + ", ";
          }
          const auto cols = parse_column_answer(answer, schema);
          const Prompt p = assemble_prompt(schema, set, dl, ql, q, cols, samples);
          ok = ok && satisfies_exclusivity(p) && p.selected_columns.size() <= kColumnCap;
        }
        CHECK(ok);
        cells += ok;
      }
    }
    CHECK(cells == 18);
  }
}

TEST_CASE("keeping samples with name descriptions breaks exclusivity") {
  const Soccer s;
  PromptOptions keep;
  keep.replace_per_column_family = false;
  const std::vector<ColumnRef> cols = {{"football_data", "bwd"}};
  const Prompt p = assemble_prompt(s.schema, s.docs, DocLevel::kPlusNameDesc, QueryLevel::kOriginal,
                                   s.example(), cols, s.samples, keep);
  CHECK(p.sample_block.has_value());
  CHECK(has_kind(p, DocKind::kNameDescription));
  CHECK_FALSE(satisfies_exclusivity(p));
  const Prompt vc = assemble_prompt(s.schema, s.docs, DocLevel::kPlusValueConsistency,
                                    QueryLevel::kOriginal, s.example(), cols, s.samples, keep);
  CHECK_FALSE(vc.sample_block.has_value());
}

TEST_CASE("too many selected columns is rejected") {
  const Soccer s;
  std::vector<ColumnRef> six;
  for (const auto& c : s.schema.tables[0].columns) {
    if (six.size() < 6) six.push_back({"betfront", c.name});
  }
  CHECK_THROWS_AS(assemble_prompt(s.schema, s.docs, DocLevel::kPlusNameDesc, QueryLevel::kOriginal,
                                  s.example(), six, s.samples),
                  Error);
}

TEST_CASE("missing docs are warnings") {
  const Soccer s;
  docs::DocSet empty;
  empty.database = "soccer";
  const Prompt p = assemble_prompt(s.schema, empty, DocLevel::kPlusGranularity, QueryLevel::kOriginal,
                                   s.example(), {{"betfront", "match"}}, s.samples);
  CHECK(p.warnings.size() == 3);
  CHECK(p.doc_blocks.empty());
  CHECK(p.user_text().find("Question:") != std::string::npos);
}

TEST_CASE("assembly is deterministic") {
  const Soccer s;
  const std::vector<ColumnRef> cols = {{"betfront", "match"}};
  const auto a = assemble_prompt(s.schema, s.docs, DocLevel::kPlusGranularity,
                                 QueryLevel::kFullyDisambiguated, s.example(), cols, s.samples);
  const auto b = assemble_prompt(s.schema, s.docs, DocLevel::kPlusGranularity,
                                 QueryLevel::kFullyDisambiguated, s.example(), cols, s.samples);
  CHECK(a.user_text() == b.user_text());
  CHECK(a.request({}).user_text == a.user_text());
  CHECK(llm::request_hash(a.request({})) == llm::request_hash(b.request({})));
}

TEST_CASE("templates") {
  CHECK(render_template("a {{x}} b {{ y }}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2");
  CHECK_THROWS_AS(render_template("{{missing}}", {}), Error);
  CHECK_THROWS_AS(render_template("{{open", {}), Error);

  // The compiled-in defaults are the files under templates/.
  const auto dir = std::filesystem::path(AMBIDOC_FIXTURE_SRC_DIR) / ".." / ".." / "templates";
  const Templates loaded = Templates::load(dir);
  const Templates& d = Templates::defaults();
  CHECK(loaded.system == d.system);
  CHECK(loaded.user == d.user);
  CHECK(loaded.column_selection == d.column_selection);
  CHECK(loaded.cot == d.cot);
  CHECK(d.user == slurp(dir / "user.txt"));

  TempDir tmp;
  {
    std::ofstream out(tmp / "cot.txt");
    out << "Answer with SQL only.\n";
  }
  const Templates custom = Templates::load(tmp.path());
  CHECK(custom.cot == "Answer with SQL only.");
  CHECK(custom.user == d.user);
  CHECK_THROWS_AS(Templates::load(tmp / "nope"), Error);
}

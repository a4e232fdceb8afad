#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "ambidoc/dataset.hpp"
#include "ambidoc/error.hpp"
#include "ambidoc/sql/evaluator.hpp"
#include "support/fixtures.hpp"

using namespace ambidoc;
using namespace ambidoc::sql;

namespace {

const char* kGold = "SELECT YEAR FROM betfront GROUP BY YEAR ORDER BY count(*) DESC LIMIT 1";

ErrorClass classify(const char* pred, const char* gold) {
  return classify_error(canonicalize_sql(pred), canonicalize_sql(gold));
}

ResultSet rs(std::vector<std::string> cols, std::vector<std::vector<Value>> rows) {
  return {std::move(cols), std::move(rows)};
}

}  // namespace

TEST_CASE("exact match is reflexive") {
  const auto g = canonicalize_sql(kGold);
  CHECK(exact_match(g, g));
  CHECK(classify_error(g, g) == ErrorClass::kCorrect);
}

TEST_CASE("appended count column is an Output error") {
  CHECK(classify("SELECT YEAR, count(*) FROM betfront GROUP BY YEAR ORDER BY count(*) DESC LIMIT 1",
                 kGold) == ErrorClass::kOutput);
  CHECK_FALSE(exact_match(
      canonicalize_sql(
          "SELECT YEAR, count(*) FROM betfront GROUP BY YEAR ORDER BY count(*) DESC LIMIT 1"),
      canonicalize_sql(kGold)));
}

TEST_CASE("equality for LIKE on the same column is Fuzzy") {
  CHECK(classify("SELECT count(*) FROM betfront WHERE match = 'Malta - Albania'",
                 "SELECT count(*) FROM betfront WHERE match LIKE '%Malta%'") == ErrorClass::kFuzzy);
}

TEST_CASE("both defects together are Other") {
  CHECK(classify("SELECT count(*), year FROM betfront WHERE match = 'Malta - Albania'",
                 "SELECT count(*) FROM betfront WHERE match LIKE '%Malta%'") == ErrorClass::kOther);
}

TEST_CASE("fuzzy needs the same column") {
  CHECK(classify("SELECT count(*) FROM betfront WHERE country = 'Malta'",
                 "SELECT count(*) FROM betfront WHERE match LIKE '%Malta%'") == ErrorClass::kOther);
}

TEST_CASE("fuzzy needs a literal that overlaps the pattern") {
  CHECK(classify("SELECT CaseId FROM crime WHERE Outcome = 'Under investigation'",
                 "SELECT CaseId FROM crime WHERE Outcome LIKE 'Investigation complete%'") ==
        ErrorClass::kOther);
  CHECK(classify("SELECT CaseId FROM crime WHERE Outcome = 'investigation complete; no suspect'",
                 "SELECT CaseId FROM crime WHERE Outcome LIKE 'Investigation complete%'") ==
        ErrorClass::kFuzzy);
  CHECK(classify("SELECT CaseId FROM crime WHERE Outcome = 'Theft'",
                 "SELECT CaseId FROM crime WHERE Outcome GLOB '*heft*'") == ErrorClass::kFuzzy);
}

TEST_CASE("missing column is not Output") {
  CHECK(classify("SELECT year FROM betfront", "SELECT year, match FROM betfront") ==
        ErrorClass::kOther);
}

TEST_CASE("diff components names what changed") {
  const auto p = canonicalize_sql("SELECT DISTINCT a FROM t WHERE x = 1 ORDER BY a LIMIT 2");
  const auto g = canonicalize_sql("SELECT a, b FROM u WHERE x = 2 GROUP BY a");
  const auto d = diff_components(p, g);
  const std::vector<std::string> expected = {"distinct", "select",   "from",
                                             "where",    "group_by", "order_by", "limit"};
  CHECK(d == expected);
  CHECK(diff_components(g, g).empty());
}

TEST_CASE("results compare numerically and ignore column order") {
  const auto a = rs({"x", "y"}, {{std::int64_t{1}, std::string("a")}, {std::int64_t{2}, std::string("b")}});
  const auto b = rs({"y", "x"}, {{std::string("b"), 2.0}, {std::string("a"), 1.0}});
  CHECK(results_equal(a, b, false));
  CHECK_FALSE(results_equal(a, b, true));  // rows in different order
  const auto c = rs({"y", "x"}, {{std::string("a"), 1.0}, {std::string("b"), 2.0}});
  CHECK(results_equal(a, c, true));
  const auto d = rs({"x"}, {{std::int64_t{1}}, {std::int64_t{2}}});
  CHECK_FALSE(results_equal(a, d, false));
  const auto e = rs({"x", "y"}, {{std::int64_t{1}, std::string("a")}, {std::int64_t{1}, std::string("b")}});
  CHECK_FALSE(results_equal(a, e, false));
}

TEST_CASE("row multiplicity matters") {
  const auto a = rs({"x"}, {{std::int64_t{1}}, {std::int64_t{1}}, {std::int64_t{2}}});
  const auto b = rs({"x"}, {{std::int64_t{1}}, {std::int64_t{2}}, {std::int64_t{2}}});
  CHECK_FALSE(results_equal(a, b, false));
}

TEST_CASE("columns with identical value sets still pair correctly") {
  const auto a = rs({"x", "y"}, {{std::int64_t{1}, std::int64_t{2}}, {std::int64_t{2}, std::int64_t{1}}});
  const auto b = rs({"y", "x"}, {{std::int64_t{2}, std::int64_t{1}}, {std::int64_t{1}, std::int64_t{2}}});
  CHECK(results_equal(a, b, false));
  const auto c = rs({"x", "y"}, {{std::int64_t{1}, std::int64_t{1}}, {std::int64_t{2}, std::int64_t{2}}});
  CHECK_FALSE(results_equal(a, c, false));
}

TEST_CASE("execution match on the soccer fixture") {
  const Database db = Database::open(testing::fixture_db("soccer"));
  // Both return 2010: 11 of the 45 betfront rows are from 2010, more than any
  // other year (checked against the fixture rows).
  const char* pred =
      "select b.year from betfront b group by 1 order by count(*) desc, 1 limit 1";
  CHECK(execution_match(db, pred, kGold));
  const ResultSet r = db.execute(kGold);
  REQUIRE(r.rows.size() == 1);
  CHECK(std::get<std::int64_t>(r.rows[0][0]) == 2010);

  CHECK_FALSE(execution_match(db, "SELECT 2011", kGold));
  CHECK(execution_match(db, "SELECT count(*), 1 FROM betfront", "SELECT 1.0, 45"));
}

TEST_CASE("execution errors name the failing side") {
  const Database db = Database::open(testing::fixture_db("soccer"));
  try {
    execution_match(db, "SELEC year FROM betfront", kGold);
    FAIL("expected ExecutionError");
  } catch (const ExecutionError& e) {
    CHECK(e.side() == StatementSide::kPredicted);
  }
  try {
    execution_match(db, kGold, "SELECT nope FROM betfront");
    FAIL("expected ExecutionError");
  } catch (const ExecutionError& e) {
    CHECK(e.side() == StatementSide::kGold);
  }
}

TEST_CASE("execution refuses writes") {
  const Database db = Database::open(testing::fixture_db("soccer"));
  CHECK_THROWS_AS(execution_match(db, "DELETE FROM betfront", kGold), ExecutionError);
  CHECK(db.execute("SELECT count(*) FROM betfront").rows[0][0] == Value(std::int64_t{45}));
}

TEST_CASE("lint flags empty-string null checks") {
  const auto w = lint_gold("SELECT count(*) FROM GreaterManchesterCrime WHERE outcome = \"\"");
  REQUIRE(w.size() == 1);
  CHECK(w[0].kind == LintKind::kImproperNullCheck);
  CHECK(lint_gold("SELECT count(*) FROM c WHERE outcome IS NULL").empty());
}

TEST_CASE("lint accepts count distinct") {
  CHECK(lint_gold("SELECT count(DISTINCT match) FROM betfront").empty());
}

TEST_CASE("lint flags count over a column with duplicates") {
  const Database db = Database::open(testing::fixture_db("soccer"));
  // Oracle: the match column really has repeated values.
  const ResultSet dup = db.execute("SELECT count(match) - count(DISTINCT match) FROM betfront");
  REQUIRE(std::get<std::int64_t>(dup.rows[0][0]) > 0);

  const auto w = lint_gold("SELECT count(match) FROM betfront", &db);
  REQUIRE(w.size() == 1);
  CHECK(w[0].kind == LintKind::kMissingDistinct);

  // datetime is unique in the fixture, so counting it is safe.
  CHECK(lint_gold("SELECT count(datetime) FROM betfront", &db).empty());
  // Grouping on the counted column makes the count intentional.
  CHECK(lint_gold("SELECT match, count(match) FROM betfront GROUP BY match", &db).empty());
}

TEST_CASE("hand-built classifier suite") {
  std::ifstream in(ambidoc::testing::fixture_file("classifier_cases.json"));
  const auto cases = nlohmann::json::parse(in);
  REQUIRE(cases.size() >= 20);
  for (const auto& c : cases) {
    INFO(c.at("name").get<std::string>());
    const auto got = classify(c.at("pred").get<std::string>().c_str(),
                              c.at("gold").get<std::string>().c_str());
    CHECK(std::string(to_string(got)) == c.at("expected").get<std::string>());
  }
}

TEST_CASE("integer and real division are told apart") {
  const Database db = Database::open(ambidoc::testing::fixture_db("soccer"));
  const char* integer = "SELECT count(*) / 2 FROM betfront";
  const char* real = "SELECT count(*) / 2.0 FROM betfront";
  CHECK_FALSE(execution_match(db, integer, real));
  CHECK_FALSE(exact_match(canonicalize_sql(integer), canonicalize_sql(real)));
}

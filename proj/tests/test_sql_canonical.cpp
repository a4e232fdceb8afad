#include <doctest.h>

#include "ambidoc/dataset.hpp"
#include "ambidoc/error.hpp"
#include "ambidoc/sql/canonical.hpp"
#include "ambidoc/sql/parser.hpp"

using namespace ambidoc;
using namespace ambidoc::sql;

namespace {

CanonicalQuery canon(const char* sql, const CanonicalOptions& opt = {}) {
  return canonicalize_sql(sql, opt);
}

bool same(const char* a, const char* b) { return canon(a) == canon(b); }

std::vector<std::string> where_texts(const CanonicalQuery& q) {
  std::vector<std::string> out;
  for (const auto& c : q.where_conds) out.push_back(c.text);
  return out;
}

Schema soccer_schema() {
  Schema s;
  TableDef b;
  b.name = "betfront";
  for (const char* c : {"year", "datetime", "country", "competion", "match"}) {
    b.columns.push_back({c, "TEXT", true});
  }
  TableDef f;
  f.name = "football_data";
  for (const char* c : {"season", "datetime", "country", "league", "bwd"}) {
    f.columns.push_back({c, "TEXT", true});
  }
  s.tables = {b, f};
  return s;
}

}  // namespace

TEST_CASE("case folding of identifiers and keywords") {
  CHECK(same("select YEAR from Betfront", "SELECT year FROM betfront"));
  const auto q = canon("select YEAR from Betfront");
  REQUIRE(q.select_items.size() == 1);
  CHECK(q.select_items[0] == "betfront.year");
}

TEST_CASE("conjunct order does not matter") {
  const auto a = canon("SELECT x FROM t WHERE a=1 AND b=2");
  const auto b = canon("SELECT x FROM t WHERE b=2 AND a=1");
  CHECK(a.where_conds == b.where_conds);
  CHECK(a == b);
}

TEST_CASE("count distinct differs from count") {
  const auto a = canon("SELECT count(match) FROM betfront");
  const auto b = canon("SELECT count(DISTINCT match) FROM betfront");
  CHECK(a.select_items != b.select_items);
  CHECK_FALSE(a == b);
}

TEST_CASE("string literals keep their case unless folding is requested") {
  CHECK_FALSE(same("SELECT a FROM t WHERE c = 'Spain'", "SELECT a FROM t WHERE c = 'spain'"));
  CanonicalOptions fold;
  fold.fold_string_literals = true;
  CHECK(canon("SELECT a FROM t WHERE c = 'Spain'", fold) ==
        canon("SELECT a FROM t WHERE c = 'spain'", fold));
}

TEST_CASE("empty-string comparison differs from IS NULL") {
  CHECK_FALSE(same("SELECT count(*) FROM c WHERE outcome = \"\"",
                   "SELECT count(*) FROM c WHERE outcome IS NULL"));
}

TEST_CASE("extra select column breaks equality") {
  CHECK_FALSE(same("SELECT YEAR FROM betfront GROUP BY YEAR ORDER BY count(*) DESC LIMIT 1",
                   "SELECT YEAR, count(*) FROM betfront GROUP BY YEAR ORDER BY count(*) DESC LIMIT 1"));
}

TEST_CASE("numeric literals are normalized") {
  CHECK(same("SELECT a FROM t WHERE y = 2011", "SELECT a FROM t WHERE y = 2011.0"));
  CHECK(same("SELECT a FROM t WHERE y = 0x10", "SELECT a FROM t WHERE y = 16"));
  CHECK(same("SELECT a FROM t WHERE y = 1e3", "SELECT a FROM t WHERE y = 1000"));
  CHECK_FALSE(same("SELECT a FROM t WHERE y = 1.5", "SELECT a FROM t WHERE y = 15"));
}

TEST_CASE("real literals stay real outside comparisons") {
  CHECK_FALSE(same("SELECT count(*) / 2 FROM t", "SELECT count(*) / 2.0 FROM t"));
  CHECK_FALSE(same("SELECT a || 1 FROM t", "SELECT a || 1.0 FROM t"));
  CHECK(same("SELECT count(*) / 2.0 FROM t", "SELECT count(*) / 2.00 FROM t"));
  CHECK(same("SELECT a * 1e3 FROM t", "SELECT a * 1000.0 FROM t"));
  CHECK(same("SELECT a FROM t WHERE y BETWEEN 2010.0 AND 2012", "SELECT a FROM t WHERE y BETWEEN 2010 AND 2012.0"));
  CHECK(same("SELECT a FROM t WHERE y IN (2010.0, 2011)", "SELECT a FROM t WHERE y IN (2011, 2010)"));
  CHECK(same("SELECT a FROM t WHERE y > -1.0", "SELECT a FROM t WHERE y > -1"));
  CHECK_FALSE(same("SELECT -1.0 * a FROM t", "SELECT -1 * a FROM t"));
}

TEST_CASE("table aliases are inlined") {
  CHECK(same("SELECT b.year FROM betfront AS b WHERE b.country = 'Malta'",
             "SELECT year FROM betfront WHERE country = 'Malta'"));
  CHECK(same("SELECT T1.match FROM betfront T1", "SELECT betfront.match FROM betfront"));
}

TEST_CASE("select aliases and ordinals resolve in GROUP BY and ORDER BY") {
  CHECK(same("SELECT year AS y, count(*) AS n FROM betfront GROUP BY y ORDER BY n DESC",
             "SELECT year, count(*) FROM betfront GROUP BY year ORDER BY count(*) DESC"));
  CHECK(same("SELECT country FROM betfront GROUP BY 1 ORDER BY 1",
             "SELECT country FROM betfront GROUP BY country ORDER BY country"));
}

TEST_CASE("commutative operands and flipped comparisons") {
  CHECK(same("SELECT a FROM t WHERE 'x' = c", "SELECT a FROM t WHERE c = 'x'"));
  CHECK(same("SELECT a FROM t WHERE 3 < b", "SELECT a FROM t WHERE b > 3"));
  CHECK(same("SELECT a + b FROM t", "SELECT b + a FROM t"));
  CHECK_FALSE(same("SELECT a - b FROM t", "SELECT b - a FROM t"));
  CHECK(same("SELECT a FROM t WHERE a != 1", "SELECT a FROM t WHERE a <> 1"));
  CHECK(same("SELECT a FROM t WHERE a == 1", "SELECT a FROM t WHERE a = 1"));
}

TEST_CASE("OR disjuncts and IN lists are sets") {
  CHECK(same("SELECT a FROM t WHERE a = 1 OR a = 2", "SELECT a FROM t WHERE a = 2 OR a = 1"));
  CHECK(same("SELECT a FROM t WHERE a IN (3, 1, 2, 1)", "SELECT a FROM t WHERE a IN (1, 2, 3)"));
  CHECK_FALSE(same("SELECT a FROM t WHERE a = 1 OR b = 2", "SELECT a FROM t WHERE a = 1 AND b = 2"));
}

TEST_CASE("NOT folds into predicates") {
  CHECK(same("SELECT a FROM t WHERE NOT a LIKE 'x%'", "SELECT a FROM t WHERE a NOT LIKE 'x%'"));
  CHECK(same("SELECT a FROM t WHERE NOT a IS NULL", "SELECT a FROM t WHERE a IS NOT NULL"));
  CHECK(same("SELECT a FROM t WHERE NOT NOT a = 1", "SELECT a FROM t WHERE a = 1"));
  CHECK(same("SELECT a FROM t WHERE NOT a < 1", "SELECT a FROM t WHERE a >= 1"));
  CHECK(same("SELECT a FROM t WHERE NOT a IN (1)", "SELECT a FROM t WHERE a NOT IN (1)"));
}

TEST_CASE("inner join conditions merge into WHERE") {
  CHECK(same("SELECT b.year FROM betfront b JOIN football_data f ON b.datetime = f.datetime",
             "SELECT betfront.year FROM football_data, betfront "
             "WHERE football_data.datetime = betfront.datetime"));
}

TEST_CASE("left joins keep their conditions") {
  const auto q = canon(
      "SELECT b.year FROM betfront b LEFT JOIN football_data f ON b.datetime = f.datetime");
  REQUIRE(q.left_joins.size() == 1);
  CHECK(q.left_joins[0].table.binding == "football_data");
  CHECK(q.where_conds.empty());
  CHECK_FALSE(same("SELECT b.year FROM betfront b LEFT JOIN football_data f ON b.datetime = f.datetime",
                   "SELECT b.year FROM betfront b JOIN football_data f ON b.datetime = f.datetime"));
}

TEST_CASE("repeated tables get numbered bindings") {
  const auto q = canon("SELECT a.x, b.x FROM t a, t b WHERE a.y = b.z");
  REQUIRE(q.from_tables.size() == 2);
  CHECK(q.from_tables.begin()->binding == "t_1");
  CHECK(q.select_items[0] == "t_1.x");
  CHECK(q.select_items[1] == "t_2.x");
}

TEST_CASE("schema resolves unqualified columns across tables") {
  const Schema s = soccer_schema();
  CanonicalOptions opt;
  opt.schema = &s;
  const auto q = canon("SELECT match, season FROM betfront, football_data", opt);
  CHECK(q.select_items[0] == "betfront.match");
  CHECK(q.select_items[1] == "football_data.season");
  // Ambiguous names stay unqualified.
  const auto r = canon("SELECT country FROM betfront, football_data", opt);
  CHECK(r.select_items[0] == "country");
}

TEST_CASE("unsupported constructs") {
  auto code_of = [](const char* sql) {
    try {
      canonicalize_sql(sql);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  CHECK(code_of("WITH x AS (SELECT 1) SELECT * FROM x") == ErrorCode::kUnsupportedConstruct);
  CHECK(code_of("SELECT a FROM t NATURAL JOIN u") == ErrorCode::kUnsupportedConstruct);
  CHECK(code_of("SELECT a FROM t RIGHT JOIN u ON 1") == ErrorCode::kUnsupportedConstruct);
  CHECK(code_of("SELECT a FROM t JOIN u USING (a)") == ErrorCode::kUnsupportedConstruct);
  CHECK(code_of("SELECT rank() OVER (ORDER BY a) FROM t") == ErrorCode::kUnsupportedConstruct);
  CHECK(code_of("SELECT a FROM t WHERE (a, b) = (1, 2)") == ErrorCode::kUnsupportedConstruct);
}

TEST_CASE("render round-trips to the same canonical form") {
  const char* cases[] = {
      "SELECT YEAR FROM betfront GROUP BY YEAR ORDER BY count(*) DESC LIMIT 1",
      "SELECT DISTINCT b.country FROM betfront b WHERE b.year BETWEEN 2010 AND 2012 AND "
      "(b.match LIKE '%Malta%' OR b.match LIKE '%Italy%')",
      "SELECT a.x, b.x FROM t a, t b WHERE a.y = b.z ORDER BY a.x LIMIT 3 OFFSET 1",
      "SELECT x FROM (SELECT year AS x FROM betfront) AS s WHERE s.x > 2010",
      "SELECT match FROM betfront WHERE year IN (SELECT year FROM betfront WHERE country = 'Spain')",
      "SELECT -year, CASE WHEN year > 2010 THEN 'late' ELSE 'early' END FROM betfront",
      "SELECT a FROM t UNION SELECT b FROM u ORDER BY 1",
      "SELECT `select`, \"it's\" FROM `group`",
      "SELECT count(*) FROM c WHERE NOT EXISTS (SELECT 1 FROM d WHERE d.k = c.k)",
      "SELECT b.year FROM betfront b LEFT JOIN football_data f ON b.datetime = f.datetime "
      "AND f.bwd > 2",
      "SELECT a FROM t WHERE a - -5 > 2 AND b * (c + d) = 4 AND e || 'x' = 'yx'",
  };
  for (const char* sql : cases) {
    CAPTURE(sql);
    const auto first = canon(sql);
    const std::string text = render(first);
    CAPTURE(text);
    const auto second = canonicalize_sql(text);
    CHECK(second == first);
    CHECK(render(second) == text);
  }
}

TEST_CASE("where conjuncts carry column and literal for simple shapes") {
  const auto q = canon("SELECT a FROM betfront WHERE 'Malta - Albania' = match AND year LIKE '20%'");
  const auto texts = where_texts(q);
  REQUIRE(texts.size() == 2);
  for (const auto& c : q.where_conds) {
    CHECK((c.column == "betfront.match" || c.column == "betfront.year"));
    REQUIRE(c.literal.has_value());
    if (c.column == "betfront.match") {
      CHECK(c.op == "=");
      CHECK(*c.literal == "Malta - Albania");
    } else {
      CHECK(c.op == "like");
    }
  }
}

#include <doctest.h>

#include <iostream>

#include "ambidoc/dataset.hpp"
#include "ambidoc/sql/canonical.hpp"
#include "support/corpus.hpp"
#include "support/fixtures.hpp"

using namespace ambidoc;
using namespace ambidoc::testing;

namespace {

void show(const std::vector<std::string>& examples) {
  for (const auto& e : examples) MESSAGE(e);
}

}  // namespace

TEST_CASE("exact match implies execution match on generated pairs") {
  const auto db = Database::open(fixture_db("soccer"));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = corpus::check_soundness(db, 200, seed);
    show(r.examples);
    CHECK(r.pairs == 200);
    CHECK(r.violations == 0);
    CHECK(r.execution_errors == 0);
    // Enough exact pairs for the implication to mean something.
    CHECK(r.exact >= 100);
  }
}

TEST_CASE("canonicalization is idempotent and ignores commutative order") {
  const auto db = Database::open(fixture_db("soccer"));
  const auto schema = db.extract_schema();
  for (std::uint64_t seed : {11u, 12u}) {
    const auto r = corpus::check_canonicalization(500, seed, &schema);
    show(r.examples);
    CHECK(r.idempotent == r.queries);
    CHECK(r.reorder_invariant == r.queries);
  }
}

TEST_CASE("generated queries execute") {
  const auto db = Database::open(fixture_db("soccer"));
  corpus::Generator gen(99);
  for (int i = 0; i < 300; ++i) {
    const auto q = gen.query();
    const auto text = corpus::render(q, gen.random_style(q));
    CHECK_NOTHROW(db.execute(text));
  }
}

TEST_CASE("plain and reordered renderings") {
  corpus::GenQuery q;
  q.select = {{"", {"betfront", "year"}}, {"count_star", {"betfront", ""}}};
  q.where = {{{"betfront", "year"}, ">", "2010"}, {{"betfront", "country"}, "=", "'Italy'"}};
  q.group_by = {{"betfront", "year"}};
  corpus::Generator gen(5);
  auto style = gen.plain_style(q);
  CHECK(corpus::render(q, style) ==
        "SELECT year, COUNT(*) FROM betfront WHERE year > 2010 AND country = 'Italy' GROUP BY year");
  style.where_order = {1, 0};
  style.flips = {true, false};
  style.select_order = {1, 0};
  CHECK(corpus::render(q, style) ==
        "SELECT COUNT(*), year FROM betfront WHERE country = 'Italy' AND 2010 < year GROUP BY year");
  CHECK(sql::canonicalize_sql(corpus::render(q, style)) ==
        sql::canonicalize_sql(corpus::render(q, gen.plain_style(q))));
}

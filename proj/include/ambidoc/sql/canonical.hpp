#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ambidoc/dataset.hpp"
#include "ambidoc/sql/ast.hpp"

namespace ambidoc::sql {

struct CanonicalOptions {
  // Compare string literals case-insensitively.
  bool fold_string_literals = false;
  // Lets unqualified columns be attributed when several tables are in scope.
  const Schema* schema = nullptr;
};

// One WHERE/HAVING/ON conjunct. Identity is the canonical text; the
// remaining fields describe simple "column op literal" shapes and are
// filled only for those.
struct Condition {
  std::string text;
  std::string column;                  // binding.column
  std::string op;                      // "=", "like", ...
  std::optional<std::string> literal;  // string literal operand

  friend bool operator==(const Condition& a, const Condition& b) { return a.text == b.text; }
  friend std::strong_ordering operator<=>(const Condition& a, const Condition& b) {
    return a.text <=> b.text;
  }
};

// A table occurrence. binding is the name columns are qualified with: the
// table name, "<table>_<n>" for repeated tables, "sub<n>" for subqueries.
struct FromEntry {
  std::string binding;
  std::string source;  // table name or "(SELECT ...)"

  friend bool operator==(const FromEntry&, const FromEntry&) = default;
  friend auto operator<=>(const FromEntry&, const FromEntry&) = default;
};

struct LeftJoin {
  FromEntry table;
  std::set<Condition> on;

  friend bool operator==(const LeftJoin&, const LeftJoin&) = default;
};

struct OrderTerm {
  std::string expr;
  bool descending = false;

  friend bool operator==(const OrderTerm&, const OrderTerm&) = default;
};

struct CanonicalQuery;

struct SetOperation {
  std::string op;  // "UNION", "UNION ALL", "INTERSECT", "EXCEPT"
  std::shared_ptr<const CanonicalQuery> rhs;
};

struct CanonicalQuery {
  bool distinct = false;
  std::vector<std::string> select_items;  // compared as a multiset
  std::set<FromEntry> from_tables;        // inner, comma and cross joins
  std::vector<LeftJoin> left_joins;       // in written order
  std::set<Condition> where_conds;        // includes inner-join conditions
  std::set<std::string> group_by;
  std::set<Condition> having;
  std::vector<OrderTerm> order_by;
  std::optional<std::string> limit;
  std::optional<std::string> offset;
  std::optional<SetOperation> set_op;
};

// Throws Error{kUnsupportedConstruct} for WITH, NATURAL/RIGHT/FULL joins,
// USING, row values, window functions and NULLS FIRST/LAST.
CanonicalQuery canonicalize(const Query& query, const CanonicalOptions& options = {});

// parse_sql followed by canonicalize.
CanonicalQuery canonicalize_sql(std::string_view text, const CanonicalOptions& options = {});

// SQL text whose canonical form is the query itself.
std::string render(const CanonicalQuery& query);

// Component equality: select items as a multiset, order_by ordered, all
// other components as sets.
bool operator==(const CanonicalQuery& a, const CanonicalQuery& b);

}  // namespace ambidoc::sql

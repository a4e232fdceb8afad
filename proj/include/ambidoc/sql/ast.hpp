#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ambidoc::sql {

struct Query;

enum class ExprKind {
  kColumn,    // [qualifier.]name
  kStar,      // [qualifier.]*
  kNumber,    // text holds the literal as written
  kString,    // text holds the unescaped value
  kNull,
  kUnary,     // op in {"-", "+", "~", "not"}
  kBinary,    // op is the operator spelling, lower-case for words
  kFunction,  // name(args) / name(*) / name(DISTINCT args)
  kLike,      // args: value, pattern[, escape]; op in {"like", "glob"}
  kIn,        // args: value, items... or subquery
  kBetween,   // args: value, low, high
  kIsNull,    // args: value
  kCase,      // [operand] (when, then)* [else]
  kCast,      // args: value; text: type name
  kCollate,   // args: value; text: collation
  kSubquery,  // scalar subquery
  kExists,
  kRow,       // (a, b) row value; parsed but not canonicalized
};

struct Expr {
  ExprKind kind = ExprKind::kNull;
  std::string text;       // literal text, column/function name, type, collation
  std::string qualifier;  // table qualifier for columns and stars
  std::string op;         // operator for unary/binary/like
  bool distinct = false;  // aggregate DISTINCT
  bool negated = false;   // NOT LIKE / NOT IN / NOT BETWEEN / IS NOT NULL / NOT EXISTS
  bool star_arg = false;  // count(*)
  bool case_operand = false;
  bool case_else = false;
  bool window = false;    // function call carried an OVER clause
  std::vector<Expr> args;
  std::shared_ptr<const Query> subquery;
  std::size_t offset = 0;
};

struct SelectItem {
  Expr expr;
  std::string alias;
};

struct TableRef {
  std::string name;  // empty for subqueries
  std::string alias;
  std::shared_ptr<const Query> subquery;
  std::size_t offset = 0;
};

enum class JoinKind { kComma, kInner, kCross, kLeft, kRight, kFull };

struct JoinItem {
  JoinKind kind = JoinKind::kComma;  // the first item is always kComma
  bool natural = false;
  TableRef table;
  std::optional<Expr> on;
  std::vector<std::string> using_columns;
};

struct SelectCore {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::vector<JoinItem> from;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  std::optional<Expr> having;
};

enum class SetOp { kUnion, kUnionAll, kIntersect, kExcept };

struct OrderItem {
  Expr expr;
  bool descending = false;
  bool nulls_clause = false;  // NULLS FIRST/LAST given
};

struct CommonTable {
  std::string name;
  std::shared_ptr<const Query> query;
};

struct Query {
  std::vector<CommonTable> with;
  SelectCore core;
  // Further compound members, applied left to right.
  std::vector<std::pair<SetOp, SelectCore>> compounds;
  std::vector<OrderItem> order_by;
  std::optional<Expr> limit;
  std::optional<Expr> offset;
};

}  // namespace ambidoc::sql

#include "ambidoc/sql/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "ambidoc/error.hpp"
#include "ambidoc/text.hpp"

namespace ambidoc::sql {

namespace {

enum class Tok { kIdent, kQuotedIdent, kDoubleQuoted, kString, kNumber, kOp, kEnd };

struct Token {
  Tok type = Tok::kEnd;
  std::string text;   // identifier/literal value, operator spelling
  std::string upper;  // upper-cased text for bare identifiers
  std::size_t offset = 0;
};

constexpr std::array<std::string_view, 46> kReserved = {
    "SELECT", "FROM",   "WHERE",   "GROUP",   "BY",      "HAVING",  "ORDER",  "LIMIT",
    "OFFSET", "UNION",  "INTERSECT", "EXCEPT", "ALL",    "DISTINCT", "AS",    "ON",
    "JOIN",   "INNER",  "LEFT",    "RIGHT",   "FULL",    "OUTER",   "CROSS",  "NATURAL",
    "USING",  "AND",    "OR",      "NOT",     "IN",      "IS",      "NULL",   "LIKE",
    "GLOB",   "BETWEEN", "CASE",   "WHEN",    "THEN",    "ELSE",    "END",    "EXISTS",
    "CAST",   "ASC",    "DESC",    "WITH",    "COLLATE", "ESCAPE"};

bool is_reserved(std::string_view upper) {
  return std::find(kReserved.begin(), kReserved.end(), upper) != kReserved.end() ||
         upper == "ISNULL" || upper == "NOTNULL";
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](Tok type, std::string text, std::size_t at) {
    Token t;
    t.type = type;
    t.offset = at;
    if (type == Tok::kIdent) t.upper = text::to_upper(text);
    t.text = std::move(text);
    out.push_back(std::move(t));
  };
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      const auto end = s.find("*/", i + 2);
      if (end == std::string_view::npos) throw SyntaxError(i, "unterminated comment");
      i = end + 2;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < s.size() && ident_char(static_cast<unsigned char>(s[i]))) ++i;
      push(Tok::kIdent, std::string(s.substr(start, i - start)), start);
      continue;
    }
    if (std::isdigit(c) || (c == '.' && i + 1 < s.size() &&
                            std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      if (c == '0' && i + 1 < s.size() && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
        i += 2;
        while (i < s.size() && std::isxdigit(static_cast<unsigned char>(s[i]))) ++i;
      } else {
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i < s.size() && s[i] == '.') {
          ++i;
          while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
        if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
          if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
            i = j;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
          }
        }
      }
      if (i < s.size() && ident_start(static_cast<unsigned char>(s[i]))) {
        throw SyntaxError(start, "malformed number");
      }
      push(Tok::kNumber, std::string(s.substr(start, i - start)), start);
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      const char q = static_cast<char>(c);
      std::string value;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == q) {
          if (i + 1 < s.size() && s[i + 1] == q) {
            value += q;
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value += s[i++];
      }
      if (!closed) throw SyntaxError(start, "unterminated quoted token");
      const Tok type = q == '\'' ? Tok::kString : q == '"' ? Tok::kDoubleQuoted : Tok::kQuotedIdent;
      push(type, std::move(value), start);
      continue;
    }
    if (c == '[') {
      const auto end = s.find(']', i + 1);
      if (end == std::string_view::npos) throw SyntaxError(start, "unterminated [identifier]");
      push(Tok::kQuotedIdent, std::string(s.substr(i + 1, end - i - 1)), start);
      i = end + 1;
      continue;
    }
    static constexpr std::array<std::string_view, 8> kTwo = {"||", "<=", ">=", "<>",
                                                             "!=", "==", "<<", ">>"};
    bool matched = false;
    for (auto op : kTwo) {
      if (s.substr(i, 2) == op) {
        push(Tok::kOp, std::string(op), start);
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("+-*/%=<>(),.;&|~").find(static_cast<char>(c)) != std::string_view::npos) {
      push(Tok::kOp, std::string(1, static_cast<char>(c)), start);
      ++i;
      continue;
    }
    throw SyntaxError(start, std::string("unexpected character '") + static_cast<char>(c) + "'");
  }
  Token end;
  end.type = Tok::kEnd;
  end.offset = s.size();
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Query parse_statement() {
    Query q = parse_query();
    while (is_op(";")) ++pos_;
    if (peek().type != Tok::kEnd) fail("unexpected trailing input");
    return q;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    std::string near = t.type == Tok::kEnd ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.offset, message + " near " + near);
  }

  bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.type == Tok::kIdent && t.upper == kw;
  }
  bool is_op(std::string_view op, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.type == Tok::kOp && t.text == op;
  }
  bool accept_kw(std::string_view kw) {
    if (!is_kw(kw)) return false;
    ++pos_;
    return true;
  }
  bool accept_op(std::string_view op) {
    if (!is_op(op)) return false;
    ++pos_;
    return true;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected " + std::string(kw));
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) fail("expected '" + std::string(op) + "'");
  }

  // A token usable as a plain name (table, column, alias).
  bool is_name(std::size_t ahead = 0, bool allow_double_quoted = true) const {
    const Token& t = peek(ahead);
    if (t.type == Tok::kIdent) return !is_reserved(t.upper);
    if (t.type == Tok::kQuotedIdent) return true;
    return allow_double_quoted && t.type == Tok::kDoubleQuoted;
  }
  std::string expect_name(const char* what) {
    if (!is_name()) fail(std::string("expected ") + what);
    return next().text;
  }

  Query parse_query() {
    Query q;
    if (accept_kw("WITH")) {
      if (accept_kw("RECURSIVE")) {}
      do {
        CommonTable cte;
        cte.name = expect_name("common table name");
        if (is_op("(")) fail("column lists on common tables are not supported");
        expect_kw("AS");
        expect_op("(");
        cte.query = std::make_shared<Query>(parse_query());
        expect_op(")");
        q.with.push_back(std::move(cte));
      } while (accept_op(","));
    }
    q.core = parse_core();
    while (true) {
      SetOp op;
      if (accept_kw("UNION")) {
        op = accept_kw("ALL") ? SetOp::kUnionAll : SetOp::kUnion;
      } else if (accept_kw("INTERSECT")) {
        op = SetOp::kIntersect;
      } else if (accept_kw("EXCEPT")) {
        op = SetOp::kExcept;
      } else {
        break;
      }
      q.compounds.emplace_back(op, parse_core());
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      do {
        OrderItem item;
        item.expr = parse_expr();
        if (accept_kw("DESC")) {
          item.descending = true;
        } else {
          accept_kw("ASC");
        }
        if (is_kw("NULLS") && (is_kw("FIRST", 1) || is_kw("LAST", 1))) {
          pos_ += 2;
          item.nulls_clause = true;
        }
        q.order_by.push_back(std::move(item));
      } while (accept_op(","));
    }
    if (accept_kw("LIMIT")) {
      Expr first = parse_expr();
      if (accept_kw("OFFSET")) {
        q.limit = std::move(first);
        q.offset = parse_expr();
      } else if (accept_op(",")) {
        q.offset = std::move(first);
        q.limit = parse_expr();
      } else {
        q.limit = std::move(first);
      }
    }
    return q;
  }

  SelectCore parse_core() {
    SelectCore core;
    if (!is_kw("SELECT")) fail("expected SELECT");
    ++pos_;
    if (accept_kw("DISTINCT")) {
      core.distinct = true;
    } else {
      accept_kw("ALL");
    }
    do {
      core.items.push_back(parse_select_item());
    } while (accept_op(","));
    if (accept_kw("FROM")) core.from = parse_from();
    if (accept_kw("WHERE")) core.where = parse_expr();
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      do {
        core.group_by.push_back(parse_expr());
      } while (accept_op(","));
    }
    if (accept_kw("HAVING")) core.having = parse_expr();
    return core;
  }

  SelectItem parse_select_item() {
    SelectItem item;
    if (is_op("*")) {
      item.expr.kind = ExprKind::kStar;
      item.expr.offset = next().offset;
      return item;
    }
    if (is_name() && is_op(".", 1) && is_op("*", 2)) {
      item.expr.kind = ExprKind::kStar;
      item.expr.offset = peek().offset;
      item.expr.qualifier = next().text;
      pos_ += 2;
      return item;
    }
    item.expr = parse_expr();
    if (accept_kw("AS")) {
      if (peek().type == Tok::kString) {
        item.alias = next().text;
      } else {
        item.alias = expect_name("alias");
      }
    } else if (is_name()) {
      item.alias = next().text;
    }
    return item;
  }

  TableRef parse_table_ref() {
    TableRef ref;
    ref.offset = peek().offset;
    if (accept_op("(")) {
      if (!is_kw("SELECT") && !is_kw("WITH")) fail("parenthesized joins are not supported");
      ref.subquery = std::make_shared<Query>(parse_query());
      expect_op(")");
    } else {
      ref.name = expect_name("table name");
      if (accept_op(".")) ref.name = expect_name("table name");  // schema-qualified
    }
    if (accept_kw("AS")) {
      ref.alias = expect_name("alias");
    } else if (is_name()) {
      ref.alias = next().text;
    }
    return ref;
  }

  std::vector<JoinItem> parse_from() {
    std::vector<JoinItem> items;
    JoinItem first;
    first.table = parse_table_ref();
    items.push_back(std::move(first));
    while (true) {
      JoinItem item;
      if (accept_op(",")) {
        item.kind = JoinKind::kComma;
      } else {
        const std::size_t save = pos_;
        if (accept_kw("NATURAL")) item.natural = true;
        if (accept_kw("LEFT")) {
          accept_kw("OUTER");
          item.kind = JoinKind::kLeft;
        } else if (accept_kw("RIGHT")) {
          accept_kw("OUTER");
          item.kind = JoinKind::kRight;
        } else if (accept_kw("FULL")) {
          accept_kw("OUTER");
          item.kind = JoinKind::kFull;
        } else if (accept_kw("INNER")) {
          item.kind = JoinKind::kInner;
        } else if (accept_kw("CROSS")) {
          item.kind = JoinKind::kCross;
        } else {
          item.kind = JoinKind::kInner;
        }
        if (!accept_kw("JOIN")) {
          pos_ = save;
          break;
        }
      }
      item.table = parse_table_ref();
      if (accept_kw("ON")) {
        item.on = parse_expr();
      } else if (accept_kw("USING")) {
        expect_op("(");
        do {
          item.using_columns.push_back(expect_name("column"));
        } while (accept_op(","));
        expect_op(")");
      }
      items.push_back(std::move(item));
    }
    return items;
  }

  Expr make(ExprKind kind, std::size_t offset) {
    Expr e;
    e.kind = kind;
    e.offset = offset;
    return e;
  }

  Expr binary(std::string op, Expr lhs, Expr rhs) {
    Expr e = make(ExprKind::kBinary, lhs.offset);
    e.op = std::move(op);
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
  }

  Expr parse_expr() { return parse_or(); }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (accept_kw("OR")) lhs = binary("or", std::move(lhs), parse_and());
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (accept_kw("AND")) lhs = binary("and", std::move(lhs), parse_not());
    return lhs;
  }

  Expr parse_not() {
    if (is_kw("NOT")) {
      const std::size_t at = next().offset;
      Expr e = make(ExprKind::kUnary, at);
      e.op = "not";
      e.args.push_back(parse_not());
      return e;
    }
    return parse_equality();
  }

  Expr parse_equality() {
    Expr lhs = parse_comparison();
    while (true) {
      const std::size_t at = peek().offset;
      if (is_op("=") || is_op("==") || is_op("!=") || is_op("<>")) {
        std::string op = next().text;
        lhs = binary(std::move(op), std::move(lhs), parse_comparison());
        continue;
      }
      if (accept_kw("ISNULL")) {
        Expr e = make(ExprKind::kIsNull, at);
        e.args.push_back(std::move(lhs));
        lhs = std::move(e);
        continue;
      }
      if (accept_kw("NOTNULL")) {
        Expr e = make(ExprKind::kIsNull, at);
        e.negated = true;
        e.args.push_back(std::move(lhs));
        lhs = std::move(e);
        continue;
      }
      if (accept_kw("IS")) {
        const bool neg = accept_kw("NOT");
        if (accept_kw("NULL")) {
          Expr e = make(ExprKind::kIsNull, at);
          e.negated = neg;
          e.args.push_back(std::move(lhs));
          lhs = std::move(e);
        } else {
          lhs = binary(neg ? "is not" : "is", std::move(lhs), parse_comparison());
        }
        continue;
      }
      bool neg = false;
      if (is_kw("NOT") && (is_kw("IN", 1) || is_kw("LIKE", 1) || is_kw("GLOB", 1) ||
                           is_kw("BETWEEN", 1) || is_kw("NULL", 1))) {
        ++pos_;
        neg = true;
      }
      if (neg && accept_kw("NULL")) {
        Expr e = make(ExprKind::kIsNull, at);
        e.negated = true;
        e.args.push_back(std::move(lhs));
        lhs = std::move(e);
        continue;
      }
      if (is_kw("LIKE") || is_kw("GLOB")) {
        Expr e = make(ExprKind::kLike, at);
        e.op = text::to_lower(next().text);
        e.negated = neg;
        e.args.push_back(std::move(lhs));
        e.args.push_back(parse_comparison());
        if (accept_kw("ESCAPE")) e.args.push_back(parse_comparison());
        lhs = std::move(e);
        continue;
      }
      if (accept_kw("BETWEEN")) {
        Expr e = make(ExprKind::kBetween, at);
        e.negated = neg;
        e.args.push_back(std::move(lhs));
        e.args.push_back(parse_comparison());
        expect_kw("AND");
        e.args.push_back(parse_comparison());
        lhs = std::move(e);
        continue;
      }
      if (accept_kw("IN")) {
        Expr e = make(ExprKind::kIn, at);
        e.negated = neg;
        e.args.push_back(std::move(lhs));
        expect_op("(");
        if (is_kw("SELECT") || is_kw("WITH")) {
          e.subquery = std::make_shared<Query>(parse_query());
        } else if (!is_op(")")) {
          do {
            e.args.push_back(parse_expr());
          } while (accept_op(","));
        }
        expect_op(")");
        lhs = std::move(e);
        continue;
      }
      if (neg) fail("expected IN, LIKE, GLOB or BETWEEN after NOT");
      return lhs;
    }
  }

  Expr parse_comparison() {
    Expr lhs = parse_bitwise();
    while (is_op("<") || is_op("<=") || is_op(">") || is_op(">=")) {
      std::string op = next().text;
      lhs = binary(std::move(op), std::move(lhs), parse_bitwise());
    }
    return lhs;
  }

  Expr parse_bitwise() {
    Expr lhs = parse_additive();
    while (is_op("&") || is_op("|") || is_op("<<") || is_op(">>")) {
      std::string op = next().text;
      lhs = binary(std::move(op), std::move(lhs), parse_additive());
    }
    return lhs;
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    while (is_op("+") || is_op("-")) {
      std::string op = next().text;
      lhs = binary(std::move(op), std::move(lhs), parse_multiplicative());
    }
    return lhs;
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_concat();
    while (is_op("*") || is_op("/") || is_op("%")) {
      std::string op = next().text;
      lhs = binary(std::move(op), std::move(lhs), parse_concat());
    }
    return lhs;
  }

  Expr parse_concat() {
    Expr lhs = parse_unary();
    while (is_op("||")) {
      next();
      lhs = binary("||", std::move(lhs), parse_unary());
    }
    return lhs;
  }

  Expr parse_unary() {
    if (is_op("-") || is_op("+") || is_op("~")) {
      const Token& t = next();
      Expr e = make(ExprKind::kUnary, t.offset);
      e.op = t.text;
      e.args.push_back(parse_unary());
      return e;
    }
    Expr e = parse_primary();
    while (is_kw("COLLATE")) {
      const std::size_t at = next().offset;
      Expr c = make(ExprKind::kCollate, at);
      c.text = text::to_lower(expect_name("collation"));
      c.args.push_back(std::move(e));
      e = std::move(c);
    }
    return e;
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::kNumber: {
        Expr e = make(ExprKind::kNumber, t.offset);
        e.text = next().text;
        return e;
      }
      case Tok::kString: {
        Expr e = make(ExprKind::kString, t.offset);
        e.text = next().text;
        return e;
      }
      case Tok::kDoubleQuoted:
        if (is_op(".", 1)) return parse_name_expr();
        {
          Expr e = make(ExprKind::kString, t.offset);
          e.text = next().text;
          return e;
        }
      case Tok::kQuotedIdent:
        return parse_name_expr();
      case Tok::kOp:
        if (t.text == "(") return parse_parenthesized();
        fail("expected an expression");
      case Tok::kEnd:
        fail("unexpected end of input");
      case Tok::kIdent:
        break;
    }
    if (t.upper == "NULL") {
      Expr e = make(ExprKind::kNull, t.offset);
      next();
      return e;
    }
    if (t.upper == "TRUE" || t.upper == "FALSE") {
      Expr e = make(ExprKind::kNumber, t.offset);
      e.text = t.upper == "TRUE" ? "1" : "0";
      next();
      return e;
    }
    if (t.upper == "CASE") return parse_case();
    if (t.upper == "CAST") {
      Expr e = make(ExprKind::kCast, next().offset);
      expect_op("(");
      e.args.push_back(parse_expr());
      expect_kw("AS");
      std::string type;
      while (is_name(0, false)) {
        if (!type.empty()) type += ' ';
        type += next().text;
      }
      if (type.empty()) fail("expected a type name");
      if (accept_op("(")) {
        type += "(";
        while (!is_op(")")) {
          if (peek().type == Tok::kEnd) fail("unterminated type arguments");
          type += next().text;
        }
        type += ")";
        next();
      }
      e.text = text::to_lower(type);
      expect_op(")");
      return e;
    }
    if (t.upper == "EXISTS") {
      Expr e = make(ExprKind::kExists, next().offset);
      expect_op("(");
      e.subquery = std::make_shared<Query>(parse_query());
      expect_op(")");
      return e;
    }
    if (is_reserved(t.upper)) fail("expected an expression");
    return parse_name_expr();
  }

  Expr parse_parenthesized() {
    const std::size_t at = next().offset;
    if (is_kw("SELECT") || is_kw("WITH")) {
      Expr e = make(ExprKind::kSubquery, at);
      e.subquery = std::make_shared<Query>(parse_query());
      expect_op(")");
      return e;
    }
    Expr inner = parse_expr();
    if (accept_op(",")) {
      Expr row = make(ExprKind::kRow, at);
      row.args.push_back(std::move(inner));
      do {
        row.args.push_back(parse_expr());
      } while (accept_op(","));
      expect_op(")");
      return row;
    }
    expect_op(")");
    return inner;
  }

  Expr parse_name_expr() {
    const Token& t = next();
    const std::size_t at = t.offset;
    std::string first = t.text;
    if (is_op("(") && t.type == Tok::kIdent) return parse_call(std::move(first), at);
    if (accept_op(".")) {
      if (accept_op("*")) {
        Expr e = make(ExprKind::kStar, at);
        e.qualifier = std::move(first);
        return e;
      }
      Expr e = make(ExprKind::kColumn, at);
      e.qualifier = std::move(first);
      e.text = expect_name("column name");
      if (accept_op(".")) {  // schema.table.column
        e.qualifier = std::move(e.text);
        e.text = expect_name("column name");
      }
      return e;
    }
    Expr e = make(ExprKind::kColumn, at);
    e.text = std::move(first);
    return e;
  }

  Expr parse_call(std::string name, std::size_t at) {
    Expr e = make(ExprKind::kFunction, at);
    e.text = text::to_lower(name);
    expect_op("(");
    if (accept_op("*")) {
      e.star_arg = true;
    } else if (!is_op(")")) {
      if (accept_kw("DISTINCT")) {
        e.distinct = true;
      } else {
        accept_kw("ALL");
      }
      do {
        e.args.push_back(parse_expr());
      } while (accept_op(","));
    }
    expect_op(")");
    if (is_kw("FILTER")) fail("FILTER clauses are not supported");
    if (is_kw("OVER")) {
      ++pos_;
      e.window = true;
      if (accept_op("(")) {
        int depth = 1;
        while (depth > 0) {
          if (peek().type == Tok::kEnd) fail("unterminated OVER clause");
          if (is_op("(")) ++depth;
          if (is_op(")")) --depth;
          ++pos_;
        }
      } else {
        expect_name("window name");
      }
    }
    return e;
  }

  Expr parse_case() {
    Expr e = make(ExprKind::kCase, next().offset);
    if (!is_kw("WHEN")) {
      e.case_operand = true;
      e.args.push_back(parse_expr());
    }
    if (!is_kw("WHEN")) fail("expected WHEN");
    while (accept_kw("WHEN")) {
      e.args.push_back(parse_expr());
      expect_kw("THEN");
      e.args.push_back(parse_expr());
    }
    if (accept_kw("ELSE")) {
      e.case_else = true;
      e.args.push_back(parse_expr());
    }
    expect_kw("END");
    return e;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_reserved_word(std::string_view word) {
  const std::string upper = text::to_upper(word);
  return is_reserved(upper) || upper == "TRUE" || upper == "FALSE";
}

Query parse_sql(std::string_view text) {
  Parser parser(tokenize(text));
  return parser.parse_statement();
}

}  // namespace ambidoc::sql

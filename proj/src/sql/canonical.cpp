#include "ambidoc/sql/canonical.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <map>

#include "ambidoc/error.hpp"
#include "ambidoc/sql/parser.hpp"
#include "ambidoc/text.hpp"

namespace ambidoc::sql {

namespace {

[[noreturn]] void unsupported(const std::string& what) {
  throw Error(ErrorCode::kUnsupportedConstruct, what + " is not supported");
}

std::string ident(std::string_view name) {
  const std::string lower = text::to_lower(name);
  bool plain = !lower.empty() &&
               (std::islower(static_cast<unsigned char>(lower[0])) || lower[0] == '_');
  for (char c : lower) {
    const auto u = static_cast<unsigned char>(c);
    if (!(std::islower(u) || std::isdigit(u) || c == '_')) plain = false;
  }
  if (plain && !is_reserved_word(lower)) return lower;
  std::string out = "`";
  for (char c : lower) {
    if (c == '`') out += '`';
    out += c;
  }
  return out + "`";
}

std::string quote_string(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

// Integer and real spellings of one value collapse unless keep_real, which
// keeps a ".0" marker on reals so 7 / 2 and 7 / 2.0 stay distinct.
std::string normalize_number(const std::string& literal, bool keep_real = true) {
  if (literal.size() > 2 && literal[0] == '0' && (literal[1] == 'x' || literal[1] == 'X')) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(literal.data() + 2, literal.data() + literal.size(), v, 16);
    if (ec == std::errc{} && ptr == literal.data() + literal.size()) {
      return std::to_string(static_cast<std::int64_t>(v));
    }
    return text::to_lower(literal);
  }
  if (std::all_of(literal.begin(), literal.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), v);
    if (ec == std::errc{} && ptr == literal.data() + literal.size()) return std::to_string(v);
  }
  std::string out = text::format_number(std::strtod(literal.c_str(), nullptr));
  if (keep_real && out.find_first_of(".eEni") == std::string::npos) out += ".0";
  return out;
}

// Canonical expression text plus whether it can appear as an operand
// without parentheses.
struct CE {
  std::string text;
  bool atomic = true;
};

std::string wrap(const CE& e) {
  if (e.atomic && (e.text.empty() || e.text[0] != '-')) return e.text;
  if (e.atomic && e.text.size() > 1 &&
      std::isdigit(static_cast<unsigned char>(e.text[1]))) {
    return e.text;  // negative literal
  }
  return "(" + e.text + ")";
}

struct Binding {
  std::string binding;
  std::string table;  // lower-case table name; empty for subqueries
  std::string alias;  // lower-case written alias, may be empty
  bool known = false;
  std::vector<std::string> columns;  // lower-case, when known

  bool has_column(const std::string& c) const {
    return known && std::find(columns.begin(), columns.end(), c) != columns.end();
  }
};

struct Scope {
  std::vector<Binding> bindings;
  const Scope* parent = nullptr;
};

struct AliasItem {
  std::string alias;  // lower-case; empty when none
  CE expr;
};

enum class Clause { kOther, kGroupOrHaving, kOrderBy };

struct Ctx {
  const Scope* scope = nullptr;
  const std::vector<AliasItem>* items = nullptr;
  Clause clause = Clause::kOther;
};

std::string flip_comparison(const std::string& op) {
  if (op == "<") return ">";
  if (op == ">") return "<";
  if (op == "<=") return ">=";
  return "<=";
}

bool is_commutative(const std::string& op) {
  return op == "=" || op == "<>" || op == "IS" || op == "IS NOT" || op == "+" || op == "*" ||
         op == "&" || op == "|";
}

std::string normalize_op(const std::string& op) {
  if (op == "==") return "=";
  if (op == "!=") return "<>";
  if (op == "is") return "IS";
  if (op == "is not") return "IS NOT";
  if (op == "and") return "AND";
  if (op == "or") return "OR";
  return op;
}

class Canonicalizer {
 public:
  explicit Canonicalizer(const CanonicalOptions& options) : opt_(options) {}

  CanonicalQuery query(const Query& q, const Scope* parent, bool keep_aliases) {
    if (!q.with.empty()) unsupported("WITH");
    Scope first_scope;
    std::vector<AliasItem> first_items;
    CanonicalQuery out = core(q.core, parent, keep_aliases, first_scope, first_items);

    CanonicalQuery* tail = &out;
    for (const auto& [op, c] : q.compounds) {
      Scope s;
      std::vector<AliasItem> items;
      auto next = std::make_shared<CanonicalQuery>(core(c, parent, keep_aliases, s, items));
      SetOperation so;
      so.op = op == SetOp::kUnion       ? "UNION"
              : op == SetOp::kUnionAll  ? "UNION ALL"
              : op == SetOp::kIntersect ? "INTERSECT"
                                        : "EXCEPT";
      so.rhs = next;
      tail->set_op = so;
      tail = next.get();
    }

    const Ctx order_ctx{&first_scope, &first_items, Clause::kOrderBy};
    for (const auto& item : q.order_by) {
      if (item.nulls_clause) unsupported("NULLS FIRST/LAST");
      out.order_by.push_back({ordinal_or_expr(item.expr, order_ctx).text, item.descending});
    }
    const Ctx plain{parent, nullptr, Clause::kOther};
    if (q.limit) out.limit = expr(*q.limit, plain).text;
    if (q.offset) {
      std::string off = expr(*q.offset, plain).text;
      if (off != "0") out.offset = std::move(off);
    }
    return out;
  }

 private:
  CanonicalQuery core(const SelectCore& c, const Scope* parent, bool keep_aliases, Scope& scope,
                      std::vector<AliasItem>& items) {
    CanonicalQuery out;
    out.distinct = c.distinct;
    scope.parent = parent;

    // Inner items first, then left joins; repeated tables are numbered in
    // that order so rendering and reparsing reproduce the same bindings.
    std::vector<const JoinItem*> ordered;
    for (const auto& j : c.from) {
      if (j.natural) unsupported("NATURAL JOIN");
      if (j.kind == JoinKind::kRight) unsupported("RIGHT JOIN");
      if (j.kind == JoinKind::kFull) unsupported("FULL JOIN");
      if (!j.using_columns.empty()) unsupported("JOIN ... USING");
      if (j.kind != JoinKind::kLeft) ordered.push_back(&j);
    }
    for (const auto& j : c.from) {
      if (j.kind == JoinKind::kLeft) ordered.push_back(&j);
    }
    std::map<std::string, int> table_count;
    for (const JoinItem* j : ordered) {
      if (!j->table.subquery) ++table_count[text::to_lower(j->table.name)];
    }
    std::map<std::string, int> seen;
    int subqueries = 0;
    std::vector<FromEntry> entries;
    for (const JoinItem* j : ordered) {
      Binding b;
      b.alias = text::to_lower(j->table.alias);
      FromEntry entry;
      if (j->table.subquery) {
        b.binding = "sub" + std::to_string(++subqueries);
        const CanonicalQuery sub = query(*j->table.subquery, parent, true);
        entry.source = "(" + render(sub) + ")";
        b.known = true;
        for (const auto& item : j->table.subquery->core.items) {
          if (item.expr.kind == ExprKind::kStar) {
            b.known = false;
          } else if (!item.alias.empty()) {
            b.columns.push_back(text::to_lower(item.alias));
          } else if (item.expr.kind == ExprKind::kColumn) {
            b.columns.push_back(text::to_lower(item.expr.text));
          }
        }
      } else {
        b.table = text::to_lower(j->table.name);
        b.binding = table_count[b.table] > 1
                        ? b.table + "_" + std::to_string(++seen[b.table])
                        : b.table;
        entry.source = ident(b.table);
        if (opt_.schema != nullptr) {
          if (const TableDef* t = opt_.schema->find_table(b.table)) {
            b.known = true;
            for (const auto& col : t->columns) b.columns.push_back(text::to_lower(col.name));
          }
        }
      }
      entry.binding = b.binding;
      entries.push_back(entry);
      scope.bindings.push_back(std::move(b));
    }

    const Ctx where_ctx{&scope, nullptr, Clause::kOther};
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      const JoinItem* j = ordered[i];
      if (j->kind == JoinKind::kLeft) {
        LeftJoin lj;
        lj.table = entries[i];
        if (j->on) conjuncts(*j->on, where_ctx, lj.on);
        out.left_joins.push_back(std::move(lj));
      } else {
        out.from_tables.insert(entries[i]);
        if (j->on) conjuncts(*j->on, where_ctx, out.where_conds);
      }
    }
    if (c.where) conjuncts(*c.where, where_ctx, out.where_conds);

    for (const auto& item : c.items) {
      CE e = expr(item.expr, where_ctx);
      items.push_back({text::to_lower(item.alias), e});
      std::string t = e.text;
      if (keep_aliases && !item.alias.empty()) t += " AS " + ident(item.alias);
      out.select_items.push_back(std::move(t));
    }

    const Ctx group_ctx{&scope, &items, Clause::kGroupOrHaving};
    for (const auto& g : c.group_by) out.group_by.insert(ordinal_or_expr(g, group_ctx).text);
    if (c.having) conjuncts(*c.having, group_ctx, out.having);
    return out;
  }

  CE ordinal_or_expr(const Expr& e, const Ctx& ctx) {
    if (e.kind == ExprKind::kNumber && ctx.items != nullptr &&
        std::all_of(e.text.begin(), e.text.end(),
                    [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      const std::size_t n = std::strtoull(e.text.c_str(), nullptr, 10);
      if (n >= 1 && n <= ctx.items->size()) return (*ctx.items)[n - 1].expr;
    }
    return expr(e, ctx);
  }

  template <typename Set>
  void conjuncts(const Expr& e, const Ctx& ctx, Set& out) {
    if (e.kind == ExprKind::kBinary && e.op == "and") {
      conjuncts(e.args[0], ctx, out);
      conjuncts(e.args[1], ctx, out);
      return;
    }
    Condition cond;
    cond.text = expr(e, ctx).text;
    describe(e, ctx, cond);
    out.insert(std::move(cond));
  }

  void describe(const Expr& e, const Ctx& ctx, Condition& cond) {
    if (e.kind == ExprKind::kBinary && (e.op == "=" || e.op == "==")) {
      const Expr* col = nullptr;
      const Expr* lit = nullptr;
      for (int i = 0; i < 2; ++i) {
        if (e.args[i].kind == ExprKind::kColumn) col = &e.args[i];
        if (e.args[i].kind == ExprKind::kString) lit = &e.args[i];
      }
      if (col != nullptr && lit != nullptr) {
        cond.column = expr(*col, ctx).text;
        cond.op = "=";
        cond.literal = literal_text(lit->text);
      }
    } else if (e.kind == ExprKind::kLike && !e.negated && e.args.size() == 2 &&
               e.args[0].kind == ExprKind::kColumn && e.args[1].kind == ExprKind::kString) {
      cond.column = expr(e.args[0], ctx).text;
      cond.op = e.op;
      cond.literal = literal_text(e.args[1].text);
    }
  }

  std::string literal_text(const std::string& s) const {
    return opt_.fold_string_literals ? text::to_lower(s) : s;
  }

  std::optional<CE> alias_lookup(const std::string& name, const Ctx& ctx) const {
    if (ctx.items == nullptr) return std::nullopt;
    for (const auto& item : *ctx.items) {
      if (!item.alias.empty() && item.alias == name) return item.expr;
    }
    return std::nullopt;
  }

  CE column(const Expr& e, const Ctx& ctx) {
    const std::string col = text::to_lower(e.text);
    if (!e.qualifier.empty()) {
      const std::string q = text::to_lower(e.qualifier);
      for (const Scope* s = ctx.scope; s != nullptr; s = s->parent) {
        for (const auto& b : s->bindings) {
          if (b.alias == q || b.binding == q) return {ident(b.binding) + "." + ident(col)};
        }
        for (const auto& b : s->bindings) {
          if (b.alias.empty() && b.table == q) return {ident(b.binding) + "." + ident(col)};
        }
      }
      return {ident(q) + "." + ident(col)};
    }
    if (ctx.clause == Clause::kOrderBy) {
      if (auto a = alias_lookup(col, ctx)) return *a;
    }
    if (ctx.clause == Clause::kGroupOrHaving && ctx.scope != nullptr) {
      const bool real_column =
          std::any_of(ctx.scope->bindings.begin(), ctx.scope->bindings.end(),
                      [&](const Binding& b) { return b.has_column(col); });
      if (!real_column) {
        if (auto a = alias_lookup(col, ctx)) return *a;
      }
    }
    for (const Scope* s = ctx.scope; s != nullptr; s = s->parent) {
      std::vector<const Binding*> hits;
      bool any_unknown = false;
      for (const auto& b : s->bindings) {
        if (b.has_column(col)) hits.push_back(&b);
        if (!b.known) any_unknown = true;
      }
      if (hits.size() == 1 && !any_unknown) return {ident(hits[0]->binding) + "." + ident(col)};
      if (hits.size() == 1 && s->bindings.size() == 1) {
        return {ident(hits[0]->binding) + "." + ident(col)};
      }
      if (hits.empty() && s->bindings.size() == 1 && any_unknown) {
        return {ident(s->bindings[0].binding) + "." + ident(col)};
      }
      if (!hits.empty() || any_unknown) break;
    }
    return {ident(col)};
  }

  CE expr(const Expr& e, const Ctx& ctx) {
    switch (e.kind) {
      case ExprKind::kColumn:
        return column(e, ctx);
      case ExprKind::kStar:
        if (e.qualifier.empty()) return {"*"};
        {
          Expr probe;
          probe.kind = ExprKind::kColumn;
          probe.qualifier = e.qualifier;
          probe.text = "x";
          const std::string qualified = column(probe, ctx).text;
          return {qualified.substr(0, qualified.size() - 1) + "*"};
        }
      case ExprKind::kNumber:
        return {normalize_number(e.text)};
      case ExprKind::kString:
        return {quote_string(literal_text(e.text))};
      case ExprKind::kNull:
        return {"NULL"};
      case ExprKind::kUnary:
        return unary(e, ctx);
      case ExprKind::kBinary:
        return binary(e, ctx);
      case ExprKind::kFunction: {
        if (e.window) unsupported("window function");
        std::string out = ident(e.text) + "(";
        if (e.star_arg) {
          out += "*";
        } else {
          if (e.distinct) out += "DISTINCT ";
          std::vector<std::string> args;
          for (const auto& a : e.args) args.push_back(expr(a, ctx).text);
          out += text::join(args, ", ");
        }
        return {out + ")"};
      }
      case ExprKind::kLike: {
        std::string out = wrap(expr(e.args[0], ctx)) + (e.negated ? " NOT " : " ") +
                          text::to_upper(e.op) + " " + wrap(expr(e.args[1], ctx));
        if (e.args.size() > 2) out += " ESCAPE " + wrap(expr(e.args[2], ctx));
        return {out, false};
      }
      case ExprKind::kIn: {
        std::string out = wrap(comparand(e.args[0], ctx)) + (e.negated ? " NOT IN (" : " IN (");
        if (e.subquery) {
          out += render(query(*e.subquery, ctx.scope, false));
        } else {
          std::set<std::string> items;
          for (std::size_t i = 1; i < e.args.size(); ++i) items.insert(comparand(e.args[i], ctx).text);
          out += text::join(std::vector<std::string>(items.begin(), items.end()), ", ");
        }
        return {out + ")", false};
      }
      case ExprKind::kBetween:
        return {wrap(comparand(e.args[0], ctx)) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") +
                    wrap(comparand(e.args[1], ctx)) + " AND " + wrap(comparand(e.args[2], ctx)),
                false};
      case ExprKind::kIsNull:
        return {wrap(expr(e.args[0], ctx)) + (e.negated ? " IS NOT NULL" : " IS NULL"), false};
      case ExprKind::kCase: {
        std::string out = "CASE";
        std::size_t i = 0;
        if (e.case_operand) out += " " + wrap(expr(e.args[i++], ctx));
        const std::size_t end = e.args.size() - (e.case_else ? 1 : 0);
        for (; i + 1 < end; i += 2) {
          out += " WHEN " + wrap(expr(e.args[i], ctx)) + " THEN " + wrap(expr(e.args[i + 1], ctx));
        }
        if (e.case_else) out += " ELSE " + wrap(expr(e.args.back(), ctx));
        return {out + " END"};
      }
      case ExprKind::kCast:
        return {"CAST(" + expr(e.args[0], ctx).text + " AS " + e.text + ")"};
      case ExprKind::kCollate:
        return {wrap(expr(e.args[0], ctx)) + " COLLATE " + ident(e.text), false};
      case ExprKind::kSubquery:
        return {"(" + render(query(*e.subquery, ctx.scope, false)) + ")"};
      case ExprKind::kExists: {
        std::string out = "EXISTS (" + render(query(*e.subquery, ctx.scope, false)) + ")";
        if (e.negated) return {"NOT " + out, false};
        return {out};
      }
      case ExprKind::kRow:
        unsupported("row value");
    }
    unsupported("expression");
  }

  CE unary(const Expr& e, const Ctx& ctx) {
    const Expr& arg = e.args[0];
    if (e.op == "not") return negate(arg, ctx);
    if (e.op == "+") return expr(arg, ctx);
    if (e.op == "-" && arg.kind == ExprKind::kNumber) return negative_number(arg.text, true);
    const CE inner = expr(arg, ctx);
    return {e.op + wrap(inner), false};
  }

  static CE negative_number(const std::string& literal, bool keep_real) {
    const std::string n = normalize_number(literal, keep_real);
    if (n == "0" || n == "0.0") return {n};
    return {"-" + n};
  }

  // Operands of comparisons compare numerically, so 2011 and 2011.0 agree.
  CE comparand(const Expr& e, const Ctx& ctx) {
    if (e.kind == ExprKind::kNumber) return {normalize_number(e.text, false)};
    if (e.kind == ExprKind::kUnary && e.op == "-" && e.args[0].kind == ExprKind::kNumber) {
      return negative_number(e.args[0].text, false);
    }
    return expr(e, ctx);
  }

  CE negate(const Expr& arg, const Ctx& ctx) {
    switch (arg.kind) {
      case ExprKind::kUnary:
        if (arg.op == "not") return expr(arg.args[0], ctx);
        break;
      case ExprKind::kLike:
      case ExprKind::kIn:
      case ExprKind::kBetween:
      case ExprKind::kIsNull:
      case ExprKind::kExists: {
        Expr flipped = arg;
        flipped.negated = !flipped.negated;
        return expr(flipped, ctx);
      }
      case ExprKind::kBinary: {
        static const std::map<std::string, std::string> kInverse = {
            {"=", "<>"}, {"==", "<>"}, {"<>", "="}, {"!=", "="},      {"<", ">="},
            {"<=", ">"}, {">", "<="},  {">=", "<"}, {"is", "is not"}, {"is not", "is"}};
        if (auto it = kInverse.find(arg.op); it != kInverse.end()) {
          Expr flipped = arg;
          flipped.op = it->second;
          return expr(flipped, ctx);
        }
        break;
      }
      default:
        break;
    }
    return {"NOT " + wrap(expr(arg, ctx)), false};
  }

  void flatten(const Expr& e, const std::string& op, const Ctx& ctx, std::set<std::string>& out) {
    if (e.kind == ExprKind::kBinary && e.op == op) {
      flatten(e.args[0], op, ctx, out);
      flatten(e.args[1], op, ctx, out);
      return;
    }
    out.insert(expr(e, ctx).text);
  }

  CE binary(const Expr& e, const Ctx& ctx) {
    if (e.op == "and" || e.op == "or") {
      std::set<std::string> parts;
      flatten(e, e.op, ctx, parts);
      if (parts.size() == 1) return {*parts.begin(), false};
      std::vector<std::string> wrapped;
      for (const auto& p : parts) wrapped.push_back(p);
      return {"(" + text::join(wrapped, e.op == "and" ? " AND " : " OR ") + ")"};
    }
    const std::string op = normalize_op(e.op);
    const bool compares = op == "=" || op == "<>" || op == "<" || op == "<=" || op == ">" ||
                          op == ">=" || op == "IS" || op == "IS NOT";
    CE lhs = compares ? comparand(e.args[0], ctx) : expr(e.args[0], ctx);
    CE rhs = compares ? comparand(e.args[1], ctx) : expr(e.args[1], ctx);
    std::string l = wrap(lhs);
    std::string r = wrap(rhs);
    std::string out_op = op;
    if (is_commutative(op)) {
      if (r < l) std::swap(l, r);
    } else if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      if (r < l) {
        std::swap(l, r);
        out_op = flip_comparison(op);
      }
    }
    return {l + " " + out_op + " " + r, false};
  }

  const CanonicalOptions& opt_;
};

std::string render_core(const CanonicalQuery& q) {
  std::string out = "SELECT ";
  if (q.distinct) out += "DISTINCT ";
  out += text::join(q.select_items, ", ");
  auto entry = [](const FromEntry& f) {
    return f.source == f.binding || f.source == ident(f.binding)
               ? f.source
               : f.source + " AS " + ident(f.binding);
  };
  auto conds = [](const std::set<Condition>& s) {
    std::vector<std::string> parts;
    for (const auto& c : s) parts.push_back(c.text);
    return text::join(parts, " AND ");
  };
  if (!q.from_tables.empty()) {
    std::vector<std::string> parts;
    for (const auto& f : q.from_tables) parts.push_back(entry(f));
    out += " FROM " + text::join(parts, ", ");
    for (const auto& lj : q.left_joins) {
      out += " LEFT JOIN " + entry(lj.table);
      if (!lj.on.empty()) out += " ON " + conds(lj.on);
    }
  }
  if (!q.where_conds.empty()) out += " WHERE " + conds(q.where_conds);
  if (!q.group_by.empty()) {
    out += " GROUP BY " +
           text::join(std::vector<std::string>(q.group_by.begin(), q.group_by.end()), ", ");
  }
  if (!q.having.empty()) out += " HAVING " + conds(q.having);
  if (q.set_op) out += " " + q.set_op->op + " " + render_core(*q.set_op->rhs);
  return out;
}

}  // namespace

CanonicalQuery canonicalize(const Query& query, const CanonicalOptions& options) {
  Canonicalizer c(options);
  return c.query(query, nullptr, false);
}

CanonicalQuery canonicalize_sql(std::string_view text, const CanonicalOptions& options) {
  return canonicalize(parse_sql(text), options);
}

std::string render(const CanonicalQuery& q) {
  std::string out = render_core(q);
  if (!q.order_by.empty()) {
    std::vector<std::string> parts;
    for (const auto& o : q.order_by) parts.push_back(o.expr + (o.descending ? " DESC" : ""));
    out += " ORDER BY " + text::join(parts, ", ");
  }
  if (q.limit) out += " LIMIT " + *q.limit;
  if (q.offset) out += " OFFSET " + *q.offset;
  return out;
}

bool operator==(const CanonicalQuery& a, const CanonicalQuery& b) {
  if (a.distinct != b.distinct || a.from_tables != b.from_tables ||
      a.left_joins != b.left_joins || a.where_conds != b.where_conds ||
      a.group_by != b.group_by || a.having != b.having || a.order_by != b.order_by ||
      a.limit != b.limit || a.offset != b.offset) {
    return false;
  }
  auto sa = a.select_items;
  auto sb = b.select_items;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) return false;
  if (a.set_op.has_value() != b.set_op.has_value()) return false;
  if (!a.set_op) return true;
  return a.set_op->op == b.set_op->op && *a.set_op->rhs == *b.set_op->rhs;
}

}  // namespace ambidoc::sql

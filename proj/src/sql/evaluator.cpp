#include "ambidoc/sql/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "ambidoc/error.hpp"
#include "ambidoc/sql/parser.hpp"
#include "ambidoc/text.hpp"

namespace ambidoc::sql {

std::string_view to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::kCorrect:
      return "Correct";
    case ErrorClass::kOutput:
      return "Output";
    case ErrorClass::kFuzzy:
      return "Fuzzy";
    case ErrorClass::kOther:
      return "Other";
  }
  return "Other";
}

std::string_view to_string(LintKind k) {
  return k == LintKind::kImproperNullCheck ? "ImproperNullCheck" : "MissingDistinct";
}

namespace {

bool set_ops_equal(const CanonicalQuery& a, const CanonicalQuery& b) {
  if (a.set_op.has_value() != b.set_op.has_value()) return false;
  if (!a.set_op) return true;
  return a.set_op->op == b.set_op->op && *a.set_op->rhs == *b.set_op->rhs;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

bool strict_sub_multiset(const std::vector<std::string>& small, const std::vector<std::string>& big) {
  if (small.size() >= big.size()) return false;
  const auto a = sorted(small);
  const auto b = sorted(big);
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool has_wildcard(const std::string& s) {
  return s.find('%') != std::string::npos || s.find('_') != std::string::npos;
}

// Literal text of a pattern, split at wildcards.
std::vector<std::string> pattern_fragments(const std::string& pattern, bool glob) {
  const std::string wild = glob ? "*?[]" : "%_";
  std::vector<std::string> out;
  std::string cur;
  for (char c : pattern) {
    if (wild.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(text::to_lower(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(text::to_lower(cur));
  return out;
}

// The equality value and the pattern share text in either direction.
bool related(const Condition& eq, const Condition& pattern) {
  if (eq.column != pattern.column) return false;
  const std::string value = text::to_lower(*eq.literal);
  for (const auto& f : pattern_fragments(*pattern.literal, pattern.op == "glob")) {
    if (value.find(f) != std::string::npos || f.find(value) != std::string::npos) return true;
  }
  return false;
}

bool pair_up(const std::vector<Condition>& pred, const std::vector<Condition>& gold, std::size_t i,
             std::vector<bool>& used) {
  if (i == pred.size()) return true;
  for (std::size_t j = 0; j < gold.size(); ++j) {
    if (used[j] || !related(pred[i], gold[j])) continue;
    used[j] = true;
    if (pair_up(pred, gold, i + 1, used)) return true;
    used[j] = false;
  }
  return false;
}

bool fuzzy_pairing(const CanonicalQuery& pred, const CanonicalQuery& gold) {
  std::vector<Condition> pred_only;
  std::vector<Condition> gold_only;
  std::set_difference(pred.where_conds.begin(), pred.where_conds.end(), gold.where_conds.begin(),
                      gold.where_conds.end(), std::back_inserter(pred_only));
  std::set_difference(gold.where_conds.begin(), gold.where_conds.end(), pred.where_conds.begin(),
                      pred.where_conds.end(), std::back_inserter(gold_only));
  if (pred_only.empty() || pred_only.size() != gold_only.size()) return false;
  for (const auto& c : pred_only) {
    if (!c.literal || c.literal->empty()) return false;
    const bool exact = c.op == "=" || (c.op == "like" && !has_wildcard(*c.literal));
    if (!exact) return false;
  }
  for (const auto& c : gold_only) {
    if (!c.literal || (c.op != "like" && c.op != "glob")) return false;
  }
  std::vector<bool> used(gold_only.size(), false);
  return pair_up(pred_only, gold_only, 0, used);
}

// Comparable key for a cell. Integers and integral reals share a form.
std::string value_key(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return "z";
  if (const auto* i = std::get_if<std::int64_t>(&v)) return "n" + std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    if (std::isfinite(*d) && *d == std::floor(*d) && std::fabs(*d) < 9.2e18) {
      return "n" + std::to_string(static_cast<std::int64_t>(*d));
    }
    return "n" + text::format_number(*d);
  }
  return "s" + std::get<std::string>(v);
}

using KeyTable = std::vector<std::vector<std::string>>;  // [row][col]

KeyTable keys_of(const ResultSet& r) {
  KeyTable out;
  out.reserve(r.rows.size());
  for (const auto& row : r.rows) {
    std::vector<std::string> k;
    k.reserve(row.size());
    for (const auto& v : row) k.push_back(value_key(v));
    out.push_back(std::move(k));
  }
  return out;
}

bool rows_match(const KeyTable& pred, const KeyTable& gold, const std::vector<std::size_t>& perm,
                bool ordered) {
  KeyTable permuted;
  permuted.reserve(pred.size());
  for (const auto& row : pred) {
    std::vector<std::string> r;
    r.reserve(perm.size());
    for (std::size_t j : perm) r.push_back(row[j]);
    permuted.push_back(std::move(r));
  }
  if (ordered) return permuted == gold;
  KeyTable g = gold;
  std::sort(permuted.begin(), permuted.end());
  std::sort(g.begin(), g.end());
  return permuted == g;
}

bool top_level_order_by(std::string_view sql) {
  try {
    return !parse_sql(sql).order_by.empty();
  } catch (const Error&) {
    return false;
  }
}

// Visits every expression in a query, subqueries included, passing the
// select core it belongs to.
void walk_query(const Query& q, const std::function<void(const Expr&, const SelectCore&)>& fn);

void walk_expr(const Expr& e, const SelectCore& core,
               const std::function<void(const Expr&, const SelectCore&)>& fn) {
  fn(e, core);
  for (const auto& a : e.args) walk_expr(a, core, fn);
  if (e.subquery) walk_query(*e.subquery, fn);
}

void walk_core(const SelectCore& c, const std::function<void(const Expr&, const SelectCore&)>& fn) {
  for (const auto& item : c.items) walk_expr(item.expr, c, fn);
  for (const auto& j : c.from) {
    if (j.table.subquery) walk_query(*j.table.subquery, fn);
    if (j.on) walk_expr(*j.on, c, fn);
  }
  if (c.where) walk_expr(*c.where, c, fn);
  for (const auto& g : c.group_by) walk_expr(g, c, fn);
  if (c.having) walk_expr(*c.having, c, fn);
}

void walk_query(const Query& q, const std::function<void(const Expr&, const SelectCore&)>& fn) {
  for (const auto& cte : q.with) walk_query(*cte.query, fn);
  walk_core(q.core, fn);
  for (const auto& [op, c] : q.compounds) walk_core(c, fn);
  for (const auto& o : q.order_by) walk_expr(o.expr, q.core, fn);
}

// Table holding column `col` referenced from core, or empty when unknown.
std::string resolve_table(const Expr& col, const SelectCore& core, const Schema* schema) {
  std::vector<const TableRef*> tables;
  for (const auto& j : core.from) {
    if (!j.table.subquery) tables.push_back(&j.table);
  }
  if (!col.qualifier.empty()) {
    for (const TableRef* t : tables) {
      if (text::iequals(t->alias, col.qualifier) ||
          (t->alias.empty() && text::iequals(t->name, col.qualifier))) {
        return t->name;
      }
    }
    return "";
  }
  if (tables.size() == 1 && core.from.size() == 1) return tables[0]->name;
  if (schema == nullptr) return "";
  std::string found;
  for (const TableRef* t : tables) {
    const TableDef* def = schema->find_table(t->name);
    if (def != nullptr && def->column_index(col.text)) {
      if (!found.empty()) return "";
      found = t->name;
    }
  }
  return found;
}

bool grouped_on(const SelectCore& core, const Expr& col) {
  return std::any_of(core.group_by.begin(), core.group_by.end(), [&](const Expr& g) {
    return g.kind == ExprKind::kColumn && text::iequals(g.text, col.text);
  });
}

bool has_duplicates(const Database& db, const std::string& table, const std::string& column) {
  const std::string sql = "SELECT count(*) FROM (SELECT " + quote_identifier(column) + " FROM " +
                          quote_identifier(table) + " WHERE " + quote_identifier(column) +
                          " IS NOT NULL GROUP BY 1 HAVING count(*) > 1)";
  const ResultSet r = db.execute(sql);
  return !r.rows.empty() && !r.rows[0].empty() &&
         std::holds_alternative<std::int64_t>(r.rows[0][0]) &&
         std::get<std::int64_t>(r.rows[0][0]) > 0;
}

}  // namespace

bool exact_match(const CanonicalQuery& pred, const CanonicalQuery& gold) { return pred == gold; }

std::vector<std::string> diff_components(const CanonicalQuery& pred, const CanonicalQuery& gold) {
  std::vector<std::string> out;
  if (pred.distinct != gold.distinct) out.emplace_back("distinct");
  if (sorted(pred.select_items) != sorted(gold.select_items)) out.emplace_back("select");
  if (pred.from_tables != gold.from_tables || pred.left_joins != gold.left_joins) {
    out.emplace_back("from");
  }
  if (pred.where_conds != gold.where_conds) out.emplace_back("where");
  if (pred.group_by != gold.group_by) out.emplace_back("group_by");
  if (pred.having != gold.having) out.emplace_back("having");
  if (pred.order_by != gold.order_by) out.emplace_back("order_by");
  if (pred.limit != gold.limit || pred.offset != gold.offset) out.emplace_back("limit");
  if (!set_ops_equal(pred, gold)) out.emplace_back("set_op");
  return out;
}

ErrorClass classify_error(const CanonicalQuery& pred, const CanonicalQuery& gold) {
  if (exact_match(pred, gold)) return ErrorClass::kCorrect;
  const auto diffs = diff_components(pred, gold);
  if (diffs.size() == 1 && diffs[0] == "select" &&
      strict_sub_multiset(gold.select_items, pred.select_items)) {
    return ErrorClass::kOutput;
  }
  if (diffs.size() == 1 && diffs[0] == "where" && fuzzy_pairing(pred, gold)) {
    return ErrorClass::kFuzzy;
  }
  return ErrorClass::kOther;
}

bool results_equal(const ResultSet& pred, const ResultSet& gold, bool ordered) {
  const std::size_t ncols = gold.columns.size();
  if (pred.columns.size() != ncols || pred.rows.size() != gold.rows.size()) return false;
  const KeyTable p = keys_of(pred);
  const KeyTable g = keys_of(gold);
  if (ncols == 0) return true;

  // Candidate pred columns per gold column, by sorted value signature.
  auto signature = [](const KeyTable& t, std::size_t col) {
    std::vector<std::string> s;
    s.reserve(t.size());
    for (const auto& row : t) s.push_back(row[col]);
    if (!s.empty()) std::sort(s.begin(), s.end());
    return s;
  };
  std::vector<std::vector<std::string>> psig(ncols);
  for (std::size_t j = 0; j < ncols; ++j) psig[j] = signature(p, j);
  std::vector<std::vector<std::size_t>> candidates(ncols);
  for (std::size_t j = 0; j < ncols; ++j) {
    const auto gs = signature(g, j);
    for (std::size_t k = 0; k < ncols; ++k) {
      if (psig[k] == gs) candidates[j].push_back(k);
    }
    if (candidates[j].empty()) return false;
    // Prefer the identity mapping.
    auto it = std::find(candidates[j].begin(), candidates[j].end(), j);
    if (it != candidates[j].end()) std::rotate(candidates[j].begin(), it, it + 1);
  }

  std::vector<std::size_t> perm(ncols);
  std::vector<bool> used(ncols, false);
  std::size_t budget = 20'000;
  std::function<bool(std::size_t)> search = [&](std::size_t j) -> bool {
    if (j == ncols) return budget-- > 0 && rows_match(p, g, perm, ordered);
    for (std::size_t k : candidates[j]) {
      if (used[k]) continue;
      used[k] = true;
      perm[j] = k;
      if (search(j + 1)) return true;
      used[k] = false;
      if (budget == 0) return false;
    }
    return false;
  };
  return search(0);
}

bool execution_match(const Database& db, std::string_view pred_sql, std::string_view gold_sql,
                     std::uint64_t max_steps) {
  ResultSet pred;
  ResultSet gold;
  try {
    pred = db.execute(pred_sql, max_steps);
  } catch (const Error& e) {
    throw ExecutionError(StatementSide::kPredicted, e.what());
  }
  try {
    gold = db.execute(gold_sql, max_steps);
  } catch (const Error& e) {
    throw ExecutionError(StatementSide::kGold, e.what());
  }
  return results_equal(pred, gold, top_level_order_by(gold_sql));
}

std::vector<LintWarning> lint_gold(std::string_view gold_sql, const Database* db) {
  const Query q = parse_sql(gold_sql);
  std::optional<Schema> schema;
  if (db != nullptr) schema = db->extract_schema();
  std::vector<LintWarning> out;
  std::set<std::string> reported;
  walk_query(q, [&](const Expr& e, const SelectCore& core) {
    if (e.kind == ExprKind::kBinary &&
        (e.op == "=" || e.op == "==" || e.op == "!=" || e.op == "<>")) {
      for (std::size_t i = 0; i < 2; ++i) {
        if (e.args[i].kind == ExprKind::kString && e.args[i].text.empty()) {
          const Expr& other = e.args[1 - i];
          const std::string name = other.kind == ExprKind::kColumn ? other.text : "expression";
          const bool eq = e.op == "=" || e.op == "==";
          out.push_back({LintKind::kImproperNullCheck,
                         "comparison of " + name + " with an empty string; use " +
                             (eq ? "IS NULL" : "IS NOT NULL") + " if missing values are meant"});
        }
      }
    }
    if (e.kind == ExprKind::kFunction && text::iequals(e.text, "count") && !e.distinct &&
        !e.star_arg && e.args.size() == 1 && e.args[0].kind == ExprKind::kColumn) {
      const Expr& col = e.args[0];
      if (grouped_on(core, col)) return;
      const std::string table = resolve_table(col, core, schema ? &*schema : nullptr);
      if (db != nullptr && !table.empty()) {
        try {
          if (!has_duplicates(*db, table, col.text)) return;
        } catch (const Error&) {
          // Unknown column or table: fall through and warn.
        }
      }
      const std::string where = table.empty() ? col.text : table + "." + col.text;
      if (!reported.insert(text::to_lower(where)).second) return;
      out.push_back({LintKind::kMissingDistinct,
                     "count(" + col.text + ") counts repeated values of " + where +
                         "; consider count(DISTINCT " + col.text + ")"});
    }
  });
  return out;
}

}  // namespace ambidoc::sql

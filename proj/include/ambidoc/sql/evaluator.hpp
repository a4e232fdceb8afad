#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ambidoc/dataset.hpp"
#include "ambidoc/sql/canonical.hpp"

namespace ambidoc::sql {

enum class ErrorClass { kCorrect, kOutput, kFuzzy, kOther };

std::string_view to_string(ErrorClass c);

bool exact_match(const CanonicalQuery& pred, const CanonicalQuery& gold);

// Names of the differing components, in this order: "distinct", "select",
// "from", "where", "group_by", "having", "order_by", "limit", "set_op".
std::vector<std::string> diff_components(const CanonicalQuery& pred, const CanonicalQuery& gold);

// Correct: exact match.
// Output: only the select list differs and gold's items are a strict
//   sub-multiset of pred's.
// Fuzzy: only WHERE conjuncts differ, and they pair up one-to-one on the
//   same column as pred "col = 'text'" against gold "col LIKE pattern",
//   where the text and the pattern's literal fragments overlap.
//   A pred LIKE without wildcards counts as an equality.
// Other: everything else.
ErrorClass classify_error(const CanonicalQuery& pred, const CanonicalQuery& gold);

inline constexpr std::uint64_t kDefaultMaxSteps = 200'000'000;

// Runs both statements and compares results as multisets of rows, ignoring
// column order. Row order is compared when gold has a top-level ORDER BY.
// Integers and reals compare by numeric value. Throws ExecutionError naming
// the side that failed.
bool execution_match(const Database& db, std::string_view pred_sql, std::string_view gold_sql,
                     std::uint64_t max_steps = kDefaultMaxSteps);

bool results_equal(const ResultSet& pred, const ResultSet& gold, bool ordered);

enum class LintKind { kImproperNullCheck, kMissingDistinct };

std::string_view to_string(LintKind k);

struct LintWarning {
  LintKind kind;
  std::string message;
};

// Flags "= ''" style null checks and count(col) without DISTINCT. With a
// database, count(col) is flagged only when the column holds duplicate
// non-null values; without one it is always flagged. Columns that are also
// grouped on are not flagged. Throws SyntaxError when gold does not parse.
std::vector<LintWarning> lint_gold(std::string_view gold_sql, const Database* db = nullptr);

}  // namespace ambidoc::sql

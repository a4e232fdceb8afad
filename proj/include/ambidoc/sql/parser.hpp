#pragma once

#include <string_view>

#include "ambidoc/sql/ast.hpp"

namespace ambidoc::sql {

// Parses one SELECT statement in the SQLite dialect subset: joins, WHERE,
// GROUP BY, HAVING, ORDER BY, LIMIT/OFFSET, DISTINCT, compound operators,
// scalar and aggregate functions, LIKE/GLOB, IN, BETWEEN, CASE, CAST,
// subqueries and EXISTS. A trailing semicolon is accepted.
//
// Double-quoted tokens are read as string literals in expression position
// (SQLite's fallback, which benchmark gold answers rely on) and as
// identifiers where only a name can appear. Backticks and [brackets] always
// quote identifiers.
//
// Throws SyntaxError carrying the byte offset of the offending token.
Query parse_sql(std::string_view text);

// Words that cannot appear unquoted as table, column or alias names.
bool is_reserved_word(std::string_view word);

}  // namespace ambidoc::sql

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ambidoc/dataset.hpp"

namespace ambidoc::docs {

enum class DocKind { kNameDescription, kValueConsistency, kCoverage, kGranularity };
enum class Provenance { kDraft, kHuman };

std::string_view to_string(DocKind kind);
std::string_view to_string(Provenance p);
// Throws Error{kUnknownKind}.
DocKind parse_kind(std::string_view s);

// NameDescription and ValueConsistency describe one column; Coverage and
// Granularity describe a whole table.
inline bool is_column_scoped(DocKind kind) {
  return kind == DocKind::kNameDescription || kind == DocKind::kValueConsistency;
}

struct Scope {
  std::string table;
  std::optional<std::string> column;

  friend bool operator==(const Scope&, const Scope&) = default;
};

struct DocEntry {
  std::string id;
  DocKind kind = DocKind::kNameDescription;
  Scope scope;
  std::string text;
  Provenance provenance = Provenance::kHuman;

  friend bool operator==(const DocEntry&, const DocEntry&) = default;
};

// Stable id for an automatically drafted entry, e.g.
// "draft/value_consistency/betfront/match".
std::string draft_id(DocKind kind, const Scope& scope);

struct QuerySpec {
  std::string id;
  std::string database;
  std::string original_text;
  std::optional<std::string> term_disambiguated_text;
  std::optional<std::string> output_schema_clause;
  std::string gold_sql;
  std::optional<std::string> gold_fix_notes;

  friend bool operator==(const QuerySpec&, const QuerySpec&) = default;
};

struct DocSet {
  std::string database;
  std::vector<DocEntry> entries;
  std::vector<QuerySpec> queries;

  friend bool operator==(const DocSet&, const DocSet&) = default;
};

// Checks the entry/query invariants (scope shape, non-empty text, unique ids,
// disambiguated text differing from the original). Throws ParseError naming
// the offending field.
void validate(const DocSet& set);

// Scope references that do not exist in schema, as "table" or "table.column".
std::vector<std::string> dangling_scopes(const DocSet& set, const Schema& schema);

DocSet parse_docs(std::string_view json_text);
std::string serialize_docs(const DocSet& set);

DocSet load_docs(const std::filesystem::path& path);
void save_docs(const DocSet& set, const std::filesystem::path& path);

// "<database>.docs.json"
std::string docs_file_name(std::string_view database);

// Human entries are never touched. A draft whose (kind, scope) already has a
// human entry is discarded; a draft matching an existing draft replaces it in
// place; anything else is appended.
DocSet merge_draft(const DocSet& existing, const std::vector<DocEntry>& drafts);

// Entries of one kind whose table is in tables. For column-scoped kinds the
// column must also be in columns, unless columns is nullopt (all columns).
// Names compare case-insensitively. With a schema the result is ordered by
// table then column position; otherwise DocSet order is kept.
std::vector<DocEntry> docs_for(const DocSet& set, DocKind kind,
                               const std::set<std::string>& tables,
                               const std::optional<std::set<ColumnRef>>& columns,
                               const Schema* schema = nullptr);

}  // namespace ambidoc::docs

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ambidoc/dataset.hpp"
#include "ambidoc/docstore.hpp"
#include "ambidoc/llm_client.hpp"

namespace ambidoc::prompt {

// Totally ordered; each level builds on the previous one.
enum class DocLevel {
  kSchemaOnly,
  kPlusSample,
  kPlusNameDesc,
  kPlusValueConsistency,
  kPlusCoverage,
  kPlusGranularity,
};

enum class QueryLevel { kOriginal, kOutputSchemaOnly, kFullyDisambiguated };

std::string_view to_string(DocLevel level);
std::string_view to_string(QueryLevel level);
// Throws Error{kConfigError}.
DocLevel parse_doc_level(std::string_view s);
QueryLevel parse_query_level(std::string_view s);

const std::vector<DocLevel>& all_doc_levels();
const std::vector<QueryLevel>& all_query_levels();

inline constexpr std::size_t kColumnCap = 5;
inline constexpr std::size_t kSampleRows = 5;

// Template texts. Placeholders are written {{name}}:
//   system            (none)
//   user              schema, documentation, samples, question, cot
//   column_selection  schema, question, cap
//   cot               (none)
struct Templates {
  std::string system;
  std::string user;
  std::string column_selection;
  std::string cot;

  // The texts shipped in templates/ and compiled into the library.
  static const Templates& defaults();
  // Reads system.txt, user.txt, column_selection.txt and cot.txt from dir;
  // missing files fall back to the defaults. Throws Error{kConfigError} when
  // dir does not exist.
  static Templates load(const std::filesystem::path& dir);
};

// Substitutes {{name}} placeholders. Throws Error{kConfigError} on a
// placeholder that has no value or is unterminated.
std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values);

// Original -> original text; OutputSchemaOnly -> original + clause;
// FullyDisambiguated -> term-disambiguated text + clause.
// Throws Error{kMissingDisambiguation}.
std::string apply_query_disambiguation(const docs::QuerySpec& spec, QueryLevel level);

// Whether a level needs a column selection round.
bool needs_column_selection(DocLevel level);

// One CREATE TABLE statement per table, in schema order.
std::string render_schema(const Schema& schema);

// Lenient parse of a column-selection answer. Qualified names must match a
// table and column; a bare name matching several tables expands to all of
// them in schema order. Unknown names are dropped, duplicates removed, the
// first cap kept. Falls back to the first cap schema-order columns when no
// name is valid.
std::vector<ColumnRef> parse_column_answer(std::string_view answer, const Schema& schema,
                                           std::size_t cap = kColumnCap);

// One completion round asking the model for the relevant columns. The model,
// temperature and max_tokens come from base.
std::vector<ColumnRef> select_columns(std::string_view query_text, const Schema& schema,
                                      llm::CompletionClient& client,
                                      const llm::CompletionRequest& base,
                                      const Templates& templates = Templates::defaults(),
                                      std::size_t cap = kColumnCap);

// The column-selection request, exposed so transcripts can be produced
// offline.
llm::CompletionRequest column_selection_request(std::string_view query_text,
                                                const Schema& schema,
                                                const llm::CompletionRequest& base,
                                                const Templates& templates = Templates::defaults(),
                                                std::size_t cap = kColumnCap);

struct DocBlock {
  docs::DocKind kind;
  docs::Scope scope;
  std::string text;

  friend bool operator==(const DocBlock&, const DocBlock&) = default;
};

struct Prompt {
  std::string system_text;
  std::string schema_block;
  // Per-column docs, then coverage, then granularity.
  std::vector<DocBlock> doc_blocks;
  std::optional<std::string> sample_block;
  std::string query_text;
  std::string cot_instruction;
  std::vector<ColumnRef> selected_columns;
  // MissingDocs notices; the prompt is still usable.
  std::vector<std::string> warnings;

  // The user message as sent to the model.
  std::string user_text(const Templates& templates = Templates::defaults()) const;
  llm::CompletionRequest request(const llm::CompletionRequest& base,
                                 const Templates& templates = Templates::defaults()) const;
};

struct PromptOptions {
  // When true, each level keeps only the newest of {samples, name
  // descriptions, value consistency}. When false, samples stay alongside
  // name descriptions and are dropped at PlusValueConsistency.
  bool replace_per_column_family = true;
};

// First rows of every table, schema order.
std::vector<RowSample> collect_samples(const Database& db, const Schema& schema,
                                       std::size_t n = kSampleRows);

std::string render_samples(const std::vector<RowSample>& samples);

// Builds the prompt for one cell. samples is only read at levels that show
// them. Throws Error{kConfigError} when more than kColumnCap columns are
// selected, and Error{kMissingDisambiguation} per apply_query_disambiguation.
Prompt assemble_prompt(const Schema& schema, const docs::DocSet& docs, DocLevel doc_level,
                       QueryLevel query_level, const docs::QuerySpec& spec,
                       const std::vector<ColumnRef>& selected_columns,
                       const std::vector<RowSample>& samples,
                       const PromptOptions& options = {},
                       const Templates& templates = Templates::defaults());

// The prompt shows at most one of samples, name descriptions and value
// consistency, and column-scoped blocks only cover selected columns.
bool satisfies_exclusivity(const Prompt& prompt);

}  // namespace ambidoc::prompt

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ambidoc/dataset.hpp"
#include "ambidoc/docstore.hpp"
#include "ambidoc/llm_client.hpp"
#include "ambidoc/prompt_builder.hpp"
#include "ambidoc/sql/evaluator.hpp"

namespace ambidoc::harness {

using prompt::DocLevel;
using prompt::QueryLevel;
using sql::ErrorClass;

enum class Backend { kLive, kReplay };

struct DatabaseConfig {
  std::string name;
  std::filesystem::path path;
  std::filesystem::path docs;
};

struct CellSpec {
  DocLevel doc_level;
  QueryLevel query_level;

  friend bool operator==(const CellSpec&, const CellSpec&) = default;
};

struct ExperimentConfig {
  std::vector<DatabaseConfig> databases;
  std::vector<DocLevel> doc_levels;
  std::vector<QueryLevel> query_levels;
  // When non-empty, only these cells run, in this order. Otherwise the full
  // doc_levels x query_levels product.
  std::vector<CellSpec> cells;
  Backend backend = Backend::kReplay;
  std::filesystem::path transcripts;
  std::filesystem::path output_dir = "report";
  std::size_t concurrency = 4;
  std::optional<std::filesystem::path> templates;
  bool replace_per_column_family = true;
  // Model identity; part of every request hash.
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_tokens = 1024;
  // Live backend only.
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
  std::uint64_t execution_max_steps = sql::kDefaultMaxSteps;

  std::vector<CellSpec> grid() const;
  llm::CompletionRequest base_request() const;
};

// Relative paths resolve against base_dir. Throws Error{kConfigError}.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);

struct QueryRecord {
  std::string database;
  std::string query_id;
  DocLevel doc_level = DocLevel::kSchemaOnly;
  QueryLevel query_level = QueryLevel::kOriginal;
  std::vector<ColumnRef> selected_columns;
  std::string column_selection_hash;  // empty when no selection round ran
  std::string prompt_hash;
  std::string predicted_sql;
  ErrorClass error_class = ErrorClass::kOther;
  std::vector<std::string> differing;
  // Result of running both queries; nullopt when either side failed.
  std::optional<bool> execution_match;
  // Pipeline stage that failed ("" when the query ran to classification):
  // prompt, column_selection, completion, extraction, parse, gold.
  std::string failed_stage;
  std::string diagnostic;

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

struct CellResult {
  DocLevel doc_level = DocLevel::kSchemaOnly;
  QueryLevel query_level = QueryLevel::kOriginal;
  std::vector<QueryRecord> records;

  std::size_t total() const { return records.size(); }
  std::size_t count(ErrorClass c) const;
  std::size_t correct() const { return count(ErrorClass::kCorrect); }
  // Not an exact match, yet the results agree.
  std::size_t correct_by_execution() const;
  std::size_t failures() const;
  // One-decimal percent, e.g. "26.7"; empty for an empty cell.
  std::string accuracy() const;
};

struct Report {
  std::vector<CellResult> cells;

  std::size_t failures() const;
};

// Loads databases, docs, samples and templates once; query workers open
// their own read-only database handles.
class Experiment {
 public:
  Experiment(ExperimentConfig config, llm::CompletionClient& client);
  ~Experiment();

  const ExperimentConfig& config() const { return config_; }

  CellResult run_cell(DocLevel doc_level, QueryLevel query_level);
  Report run_grid();

 private:
  struct Loaded;
  QueryRecord run_query(const Loaded& db, const docs::QuerySpec& spec, DocLevel doc_level,
                        QueryLevel query_level, const Database& handle);

  ExperimentConfig config_;
  llm::CompletionClient& client_;
  prompt::Templates templates_;
  std::vector<std::unique_ptr<Loaded>> loaded_;
};

// Client for a config's backend: replay from the transcript store, or the
// live endpoint with every exchange recorded into it.
class BackendClient : public llm::CompletionClient {
 public:
  explicit BackendClient(const ExperimentConfig& config);
  ~BackendClient() override;
  std::string complete(const llm::CompletionRequest& request) override;

 private:
  std::unique_ptr<llm::CompletionClient> inner_;
  std::unique_ptr<llm::TranscriptStore> store_;
  std::unique_ptr<llm::CompletionClient> recorder_;
};

inline constexpr const char* kSummaryHeader =
    "doc_level,query_level,total,correct,output,fuzzy,other,accuracy";

std::string summary_csv(const Report& report);
// One JSON object per line, cells in report order.
std::string details_jsonl(const Report& report);
// Long format for stacked bars: doc_level,query_level,class,count,percent.
std::string plotdata_csv(const Report& report);
// doc_level,query_level,total,exact_correct,correct_by_execution,execution_failures
std::string execution_csv(const Report& report);

// Writes summary.csv, details.jsonl, plotdata.csv and execution.csv.
// Throws Error{kIoError}.
void emit_report(const Report& report, const std::filesystem::path& dir);

// Rebuilds a report from details.jsonl. Cells appear in first-seen order;
// cells without queries are not recoverable.
Report parse_details(std::string_view jsonl);
Report load_report(const std::filesystem::path& dir);

}  // namespace ambidoc::harness

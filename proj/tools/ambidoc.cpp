// Command-line front end: profiling, documentation drafting, gold linting,
// experiment runs and report regeneration.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>

#include "ambidoc/dataset.hpp"
#include "ambidoc/docstore.hpp"
#include "ambidoc/error.hpp"
#include "ambidoc/harness.hpp"
#include "ambidoc/profiler.hpp"
#include "ambidoc/sql/evaluator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ambidoc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

fs::path default_docs_path(const fs::path& db) {
  return db.parent_path() / docs::docs_file_name(db.stem().string());
}

json profile_json(const profile::DatabaseProfile& p) {
  json out;
  out["formats"] = json::array();
  for (const auto& f : p.formats) {
    json outliers = json::array();
    for (const auto& o : f.outliers) outliers.push_back({{"value", o.value}, {"row", o.row_index}});
    out["formats"].push_back({{"table", f.table},
                              {"column", f.column},
                              {"pattern", f.pattern},
                              {"conforming", f.conforming_count},
                              {"nulls", f.null_count},
                              {"outliers", outliers}});
  }
  out["coverage"] = json::array();
  for (const auto& c : p.coverage) {
    json spans = json::object();
    for (const auto& [col, span] : c.temporal_spans) spans[col] = {span.min, span.max};
    json domains = json::object();
    for (const auto& [col, values] : c.categorical_domains) domains[col] = values;
    out["coverage"].push_back({{"table", c.table},
                               {"rows", c.row_count},
                               {"temporal_spans", spans},
                               {"categorical_domains", domains}});
  }
  out["granularity"] = json::array();
  for (const auto& g : p.granularity) {
    out["granularity"].push_back({{"table", g.table},
                                  {"rows", g.row_count},
                                  {"duplicate_row_ratio", g.duplicate_row_ratio},
                                  {"candidate_keys", g.candidate_keys},
                                  {"aggregate_hint_columns", g.aggregate_hint_columns},
                                  {"verdict", std::string(profile::to_string(g.verdict))}});
  }
  return out;
}

int cmd_profile(const fs::path& db_path) {
  const auto db = Database::open(db_path);
  std::cout << profile_json(profile::profile_database(db)).dump(2) << "\n";
  return kExitOk;
}

int cmd_docgen(const fs::path& db_path, fs::path docs_path, bool dry_run) {
  const auto db = Database::open(db_path);
  if (docs_path.empty()) docs_path = default_docs_path(db_path);
  docs::DocSet existing;
  if (fs::exists(docs_path)) {
    existing = docs::load_docs(docs_path);
  } else {
    existing.database = db_path.stem().string();
  }
  const auto schema = db.extract_schema();
  const auto p = profile::profile_database(db);
  const auto drafts = profile::draft_documentation(schema, p.formats, p.coverage, p.granularity);
  const auto merged = docs::merge_draft(existing, drafts);
  for (const auto& s : docs::dangling_scopes(merged, schema)) {
    std::cerr << "warning: scope " << s << " is not in the schema\n";
  }
  if (dry_run) {
    std::cout << docs::serialize_docs(merged);
  } else {
    docs::save_docs(merged, docs_path);
    std::cout << drafts.size() << " draft entries merged into " << docs_path.string() << "\n";
  }
  return kExitOk;
}

int cmd_lint(const fs::path& db_path, fs::path docs_path) {
  const auto db = Database::open(db_path);
  if (docs_path.empty()) docs_path = default_docs_path(db_path);
  const auto set = docs::load_docs(docs_path);
  std::size_t flagged = 0;
  for (const auto& q : set.queries) {
    try {
      const auto warnings = sql::lint_gold(q.gold_sql, &db);
      for (const auto& w : warnings) {
        std::cout << q.id << ": " << sql::to_string(w.kind) << ": " << w.message << "\n";
      }
      if (!warnings.empty()) ++flagged;
    } catch (const Error& e) {
      std::cout << q.id << ": " << to_string(e.code()) << ": " << e.what() << "\n";
      ++flagged;
    }
  }
  std::cout << flagged << " of " << set.queries.size() << " gold queries flagged\n";
  return kExitOk;
}

int cmd_run(const fs::path& config_path, const std::optional<fs::path>& out_dir,
            const std::optional<std::string>& backend, const std::optional<fs::path>& transcripts,
            std::optional<std::size_t> concurrency) {
  harness::ExperimentConfig config;
  try {
    config = harness::load_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (backend) {
      if (*backend == "replay") {
        config.backend = harness::Backend::kReplay;
      } else if (*backend == "live") {
        config.backend = harness::Backend::kLive;
      } else {
        throw Error(ErrorCode::kConfigError, "backend must be live or replay");
      }
    }
    if (transcripts) config.transcripts = *transcripts;
    if (concurrency) config.concurrency = *concurrency;
    harness::validate(config);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitError;
  }
  harness::BackendClient client(config);
  harness::Experiment experiment(config, client);
  const auto report = experiment.run_grid();
  harness::emit_report(report, config.output_dir);
  std::cout << harness::summary_csv(report);
  if (report.failures() > 0) {
    std::cerr << report.failures() << " queries failed before classification; see "
              << (config.output_dir / "details.jsonl").string() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_report(const fs::path& dir, const std::optional<fs::path>& out_dir) {
  const auto report = harness::load_report(dir);
  harness::emit_report(report, out_dir.value_or(dir));
  std::cout << harness::summary_csv(report);
  return report.failures() > 0 ? kExitPartial : kExitOk;
}

int cmd_import(const std::vector<fs::path>& csv_files, const fs::path& target) {
  import_csv(csv_files, target);
  std::cout << "wrote " << target.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-ambiguity documentation toolkit for text-to-SQL evaluation"};
  app.require_subcommand(1);

  fs::path db_path;
  fs::path docs_path;
  bool dry_run = false;

  auto* profile_cmd = app.add_subcommand("profile", "Print format, coverage and granularity profiles as JSON");
  profile_cmd->add_option("db", db_path, "SQLite database")->required();

  auto* docgen_cmd = app.add_subcommand("docgen", "Draft documentation and merge it into a docs file");
  docgen_cmd->add_option("db", db_path, "SQLite database")->required();
  docgen_cmd->add_option("--docs", docs_path, "Docs file (default <db dir>/<db stem>.docs.json)");
  docgen_cmd->add_flag("--dry-run", dry_run, "Print the merged docs instead of writing them");

  auto* lint_cmd = app.add_subcommand("lint", "Lint the gold SQL of every query in a docs file");
  lint_cmd->add_option("db", db_path, "SQLite database")->required();
  lint_cmd->add_option("--docs", docs_path, "Docs file (default <db dir>/<db stem>.docs.json)");

  fs::path config_path;
  std::optional<fs::path> out_dir;
  std::optional<std::string> backend;
  std::optional<fs::path> transcripts;
  std::optional<std::size_t> concurrency;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment grid and write the report");
  run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "Override output_dir");
  run_cmd->add_option("--backend", backend, "Override backend (live or replay)");
  run_cmd->add_option("--transcripts", transcripts, "Override the transcript directory");
  run_cmd->add_option("--concurrency", concurrency, "Override concurrency");

  fs::path report_dir;
  auto* report_cmd = app.add_subcommand("report", "Regenerate report files from details.jsonl");
  report_cmd->add_option("dir", report_dir, "Report directory")->required();
  report_cmd->add_option("--out", out_dir, "Write the files here instead");

  std::vector<fs::path> csv_files;
  fs::path target;
  auto* import_cmd = app.add_subcommand("import", "Build a SQLite database from CSV files");
  import_cmd->add_option("csv", csv_files, "CSV files, one table each")->required();
  import_cmd->add_option("-o,--output", target, "Database file to create")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*profile_cmd) return cmd_profile(db_path);
    if (*docgen_cmd) return cmd_docgen(db_path, docs_path, dry_run);
    if (*lint_cmd) return cmd_lint(db_path, docs_path);
    if (*run_cmd) return cmd_run(config_path, out_dir, backend, transcripts, concurrency);
    if (*report_cmd) return cmd_report(report_dir, out_dir);
    if (*import_cmd) return cmd_import(csv_files, target);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

// Acceptance checks 1-6. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.
#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "ambidoc/dataset.hpp"
#include "ambidoc/docstore.hpp"
#include "ambidoc/error.hpp"
#include "ambidoc/harness.hpp"
#include "ambidoc/profiler.hpp"
#include "ambidoc/prompt_builder.hpp"
#include "ambidoc/sql/canonical.hpp"
#include "ambidoc/sql/evaluator.hpp"
#include "support/corpus.hpp"

namespace fs = std::filesystem;
using namespace ambidoc;

namespace {

struct Paths {
  fs::path db_dir;   // built fixture databases
  fs::path src_dir;  // committed fixtures (docs, transcripts, classifier cases)

  fs::path db(const std::string& name) const { return db_dir / (name + ".db"); }
  fs::path docs(const std::string& name) const { return src_dir / "docs" / (name + ".docs.json"); }
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("ambidoc-acceptance-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Outcome soundness(const Paths& paths, std::size_t pairs, std::uint64_t seed) {
  const auto start = Clock::now();
  const auto db = Database::open(paths.db("soccer"));
  const auto r = testing::corpus::check_soundness(db, pairs, seed);
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = r.pairs >= 200 && r.violations == 0 && r.execution_errors == 0 && secs < 60.0;
  o.detail = std::to_string(r.pairs) + " pairs, " + std::to_string(r.exact) + " exact, " +
             std::to_string(r.violations) + " violations, " + std::to_string(r.execution_errors) +
             " execution errors, " + fixed(secs, 2) + "s";
  for (const auto& e : r.examples) o.detail += "\n    " + e;
  return o;
}

Outcome canonicalization(const Paths& paths, std::size_t queries, std::uint64_t seed) {
  const auto db = Database::open(paths.db("soccer"));
  const auto schema = db.extract_schema();
  const auto r = testing::corpus::check_canonicalization(queries, seed, &schema);

  struct Pair {
    const char* what;
    const char* a;
    const char* b;
  };
  const Pair discriminations[] = {
      {"extra select column", "SELECT year, count(*) FROM betfront GROUP BY year",
       "SELECT year FROM betfront GROUP BY year"},
      {"missing DISTINCT", "SELECT count(match) FROM betfront",
       "SELECT count(DISTINCT match) FROM betfront"},
      {"= \"\" against IS NULL",
       "SELECT count(*) FROM GreaterManchesterCrime WHERE Outcome = \"\"",
       "SELECT count(*) FROM GreaterManchesterCrime WHERE Outcome IS NULL"},
  };
  std::size_t discriminated = 0;
  std::string missed;
  for (const auto& d : discriminations) {
    if (!sql::exact_match(sql::canonicalize_sql(d.a), sql::canonicalize_sql(d.b))) {
      ++discriminated;
    } else {
      missed += std::string("\n    not discriminated: ") + d.what;
    }
  }
  Outcome o;
  o.pass = r.queries >= 500 && r.idempotent == r.queries && r.reorder_invariant == r.queries &&
           discriminated == 3;
  o.detail = std::to_string(r.queries) + " queries, idempotent " + std::to_string(r.idempotent) +
             ", reorder-invariant " + std::to_string(r.reorder_invariant) + ", discriminations " +
             std::to_string(discriminated) + "/3";
  for (const auto& e : r.examples) o.detail += "\n    " + e;
  o.detail += missed;
  return o;
}

Outcome classifier_fixtures(const Paths& paths) {
  std::ifstream in(paths.src_dir / "classifier_cases.json");
  const auto cases = nlohmann::json::parse(in);
  std::size_t right = 0;
  std::string wrong;
  bool has_output = false, has_fuzzy = false, has_other = false;
  for (const auto& c : cases) {
    const std::string expected = c.at("expected");
    has_output |= expected == "Output";
    has_fuzzy |= expected == "Fuzzy";
    has_other |= expected == "Other";
    std::string got;
    try {
      got = std::string(sql::to_string(
          sql::classify_error(sql::canonicalize_sql(c.at("pred").get<std::string>()),
                              sql::canonicalize_sql(c.at("gold").get<std::string>()))));
    } catch (const Error& e) {
      got = std::string("error: ") + e.what();
    }
    if (got == expected) {
      ++right;
    } else {
      wrong += "\n    " + c.at("name").get<std::string>() + ": expected " + expected + ", got " + got;
    }
  }
  Outcome o;
  o.pass = cases.size() >= 20 && right == cases.size() && has_output && has_fuzzy && has_other;
  o.detail = std::to_string(right) + "/" + std::to_string(cases.size()) + " classified" + wrong;
  return o;
}

Outcome replay_determinism(const Paths& paths) {
  using namespace harness;
  ExperimentConfig c;
  c.databases = {{"soccer", paths.db("soccer"), paths.docs("soccer")},
                 {"crime", paths.db("crime"), paths.docs("crime")}};
  c.cells = {{DocLevel::kSchemaOnly, QueryLevel::kOriginal},
             {DocLevel::kSchemaOnly, QueryLevel::kFullyDisambiguated},
             {DocLevel::kPlusGranularity, QueryLevel::kOriginal},
             {DocLevel::kPlusGranularity, QueryLevel::kOutputSchemaOnly},
             {DocLevel::kPlusGranularity, QueryLevel::kFullyDisambiguated}};
  c.backend = Backend::kReplay;
  c.transcripts = paths.src_dir / "replay" / "transcripts";

  ScratchDir scratch;
  std::vector<Report> reports;
  for (std::size_t concurrency : {4u, 4u, 1u}) {
    c.concurrency = concurrency;
    BackendClient client(c);
    Experiment experiment(c, client);
    reports.push_back(experiment.run_grid());
    emit_report(reports.back(), scratch.path() / std::to_string(reports.size()));
  }
  std::size_t identical = 0;
  const char* files[] = {"summary.csv", "details.jsonl", "plotdata.csv", "execution.csv"};
  for (const char* f : files) {
    const std::string first = slurp(scratch.path() / "1" / f);
    if (!first.empty() && first == slurp(scratch.path() / "2" / f) &&
        first == slurp(scratch.path() / "3" / f)) {
      ++identical;
    }
  }

  const CellResult& baseline = reports.front().cells.front();
  CellResult constructed;
  for (int i = 0; i < 45; ++i) {
    QueryRecord r;
    r.query_id = "q" + std::to_string(i);
    r.error_class = i < 12 ? sql::ErrorClass::kCorrect : sql::ErrorClass::kOther;
    constructed.records.push_back(r);
  }

  Outcome o;
  o.pass = identical == 4 && reports.front().cells.size() == 5 && baseline.total() == 45 &&
           baseline.correct() == 12 && baseline.accuracy() == "26.7" &&
           constructed.accuracy() == "26.7" && reports.front().failures() == 0;
  o.detail = std::to_string(identical) + "/4 report files byte-identical over 3 runs, " +
             "SchemaOnly/Original " + std::to_string(baseline.correct()) + "/" +
             std::to_string(baseline.total()) + " = " + baseline.accuracy() +
             "%, constructed 12/45 = " + constructed.accuracy() + "%";
  return o;
}

Outcome profiler_fidelity(const Paths& paths) {
  const auto start = Clock::now();
  const auto db = Database::open(paths.db("soccer"));
  const auto profile = profile::profile_database(db);

  auto format_of = [&](const std::string& t, const std::string& col) -> const profile::FormatProfile* {
    for (const auto& f : profile.formats) {
      if (f.table == t && f.column == col) return &f;
    }
    return nullptr;
  };
  const auto* match = format_of("betfront", "match");
  const auto* season = format_of("football_data", "season");

  // Oracle: seasons written without a slash.
  std::vector<profile::Outlier> expected;
  const auto seasons = db.column_values("football_data", "season");
  for (std::size_t i = 0; i < seasons.size(); ++i) {
    if (is_null(seasons[i])) continue;
    const std::string s = to_text(seasons[i]);
    if (s.find('/') == std::string::npos) expected.push_back({s, i});
  }
  const bool match_ok = match && match->pattern == "<word> - <word>";
  const bool outlier_ok = season && expected.size() == 1 && season->outliers == expected;

  profile::TemporalSpan span;
  for (const auto& c : profile.coverage) {
    if (c.table == "betfront" && c.temporal_spans.count("year")) span = c.temporal_spans.at("year");
  }
  const auto oracle_span = db.execute("SELECT min(year), max(year) FROM betfront");
  const bool span_ok = span == profile::TemporalSpan{"2009", "2013"} &&
                       span.min == to_text(oracle_span.rows[0][0]) &&
                       span.max == to_text(oracle_span.rows[0][1]);

  double ratio = -1;
  for (const auto& g : profile.granularity) {
    if (g.table == "betfront") ratio = g.duplicate_row_ratio;
  }
  const auto distinct = db.execute("SELECT count(*) FROM (SELECT DISTINCT * FROM betfront)");
  const auto total = db.execute("SELECT count(*) FROM betfront");
  const bool ratio_ok = ratio == 0.0 && to_text(distinct.rows[0][0]) == to_text(total.rows[0][0]);

  const double secs = seconds_since(start);
  Outcome o;
  o.pass = match_ok && outlier_ok && span_ok && ratio_ok && secs < 10.0;
  o.detail = "match pattern " + (match ? match->pattern : std::string("missing")) +
             ", season outliers " + std::to_string(season ? season->outliers.size() : 0) +
             (outlier_ok ? " (" + expected[0].value + " at row " + std::to_string(expected[0].row_index) + ")"
                         : std::string(" (mismatch)")) +
             ", year span (" + span.min + ", " + span.max + "), betfront duplicate ratio " +
             fixed(ratio, 3) + ", " + fixed(secs, 2) + "s";
  return o;
}

Outcome prompt_invariants(const Paths& paths) {
  std::string detail;
  bool pass = true;
  for (const char* name : {"soccer", "crime"}) {
    const auto db = Database::open(paths.db(name));
    const auto schema = db.extract_schema();
    const auto set = docs::load_docs(paths.docs(name));
    const auto samples = prompt::collect_samples(db, schema);
    // Name every column; the selection cap has to trim it.
    std::string answer;
    for (const auto& t : schema.tables) {
      for (const auto& c : t.columns) answer += t.name + "." + c.name + ", ";
    }
    const auto cols = prompt::parse_column_answer(answer, schema);
    std::size_t cells = 0;
    for (auto dl : prompt::all_doc_levels()) {
      for (auto ql : prompt::all_query_levels()) {
        bool ok = !set.queries.empty();
        for (const auto& q : set.queries) {
          const auto p = prompt::assemble_prompt(schema, set, dl, ql, q, cols, samples);
          ok = ok && p.selected_columns.size() <= prompt::kColumnCap &&
               prompt::satisfies_exclusivity(p);
        }
        cells += ok;
      }
    }
    pass = pass && cells == 18;
    if (!detail.empty()) detail += ", ";
    detail += std::string(name) + " " + std::to_string(cells) + "/18 cells";
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  Paths paths{AMBIDOC_FIXTURE_DB_DIR, AMBIDOC_FIXTURE_SRC_DIR};
  std::size_t pairs = 250;
  std::size_t queries = 600;
  std::uint64_t seed = 20240101;
  app.add_option("--db-dir", paths.db_dir, "Directory with soccer.db and crime.db");
  app.add_option("--fixtures", paths.src_dir, "Committed fixture directory");
  app.add_option("--pairs", pairs, "Query pairs for the soundness corpus");
  app.add_option("--queries", queries, "Queries for the canonicalization corpus");
  app.add_option("--seed", seed, "Corpus seed");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int number;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "evaluator soundness", [&] { return soundness(paths, pairs, seed); }},
      {2, "canonicalization", [&] { return canonicalization(paths, queries, seed + 1); }},
      {3, "classifier fixtures", [&] { return classifier_fixtures(paths); }},
      {4, "replay determinism", [&] { return replay_determinism(paths); }},
      {5, "profiler fidelity", [&] { return profiler_fidelity(paths); }},
      {6, "prompt invariants", [&] { return prompt_invariants(paths); }},
  };

  int passed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    passed += o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.number << " " << c.title << ": " << o.detail
              << "\n";
  }
  std::cout << passed << "/" << criteria.size() << " criteria passed\n";
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}

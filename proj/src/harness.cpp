#include "ambidoc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ambidoc/error.hpp"
#include "ambidoc/sql/canonical.hpp"
#include "ambidoc/text.hpp"

namespace ambidoc::harness {

namespace {

using json = nlohmann::json;

const std::array<ErrorClass, 4> kClasses = {ErrorClass::kCorrect, ErrorClass::kOutput,
                                            ErrorClass::kFuzzy, ErrorClass::kOther};

Error config_error(const std::string& message) { return Error(ErrorCode::kConfigError, message); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

ErrorClass parse_class(std::string_view s) {
  for (ErrorClass c : kClasses) {
    if (sql::to_string(c) == s) return c;
  }
  throw Error(ErrorCode::kParseError, "unknown error class: " + std::string(s));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

std::string cell_key(const CellResult& c) {
  return std::string(prompt::to_string(c.doc_level)) + "," +
         std::string(prompt::to_string(c.query_level));
}

QueryRecord failed(QueryRecord r, const char* stage, const std::string& message) {
  r.error_class = ErrorClass::kOther;
  r.failed_stage = stage;
  r.diagnostic = message;
  return r;
}

}  // namespace

std::vector<CellSpec> ExperimentConfig::grid() const {
  if (!cells.empty()) return cells;
  std::vector<CellSpec> out;
  for (DocLevel d : doc_levels) {
    for (QueryLevel q : query_levels) out.push_back({d, q});
  }
  return out;
}

llm::CompletionRequest ExperimentConfig::base_request() const {
  llm::CompletionRequest r;
  r.model = model;
  r.temperature = temperature;
  r.max_tokens = max_tokens;
  return r;
}

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config must be a JSON object");
  static const std::set<std::string> known = {
      "databases", "doc_levels", "query_levels", "cells", "backend", "transcripts",
      "output_dir", "concurrency", "templates", "replace_per_column_family", "model",
      "temperature", "max_tokens", "endpoint", "api_key_env", "timeout_seconds",
      "execution_max_steps"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw config_error("unknown config key: " + key);
  }

  ExperimentConfig c;
  try {
    for (const auto& d : j.at("databases")) {
      DatabaseConfig db;
      db.name = d.at("name").get<std::string>();
      db.path = resolve(base_dir, d.at("path").get<std::string>());
      db.docs = d.contains("docs") ? resolve(base_dir, d.at("docs").get<std::string>())
                                   : db.path.parent_path() / docs::docs_file_name(db.name);
      c.databases.push_back(std::move(db));
    }
    if (j.contains("doc_levels")) {
      for (const auto& s : j["doc_levels"]) c.doc_levels.push_back(prompt::parse_doc_level(s.get<std::string>()));
    }
    if (j.contains("query_levels")) {
      for (const auto& s : j["query_levels"]) {
        c.query_levels.push_back(prompt::parse_query_level(s.get<std::string>()));
      }
    }
    if (j.contains("cells")) {
      for (const auto& cell : j["cells"]) {
        c.cells.push_back({prompt::parse_doc_level(cell.at("doc_level").get<std::string>()),
                           prompt::parse_query_level(cell.at("query_level").get<std::string>())});
      }
    }
    const std::string backend = j.value("backend", std::string("replay"));
    if (backend == "replay") {
      c.backend = Backend::kReplay;
    } else if (backend == "live") {
      c.backend = Backend::kLive;
    } else {
      throw config_error("backend must be live or replay, got " + backend);
    }
    if (j.contains("transcripts")) c.transcripts = resolve(base_dir, j["transcripts"].get<std::string>());
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("report")));
    c.concurrency = j.value("concurrency", c.concurrency);
    if (j.contains("templates")) c.templates = resolve(base_dir, j["templates"].get<std::string>());
    c.replace_per_column_family = j.value("replace_per_column_family", c.replace_per_column_family);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.execution_max_steps = j.value("execution_max_steps", c.execution_max_steps);
  } catch (const json::exception& e) {
    throw config_error(std::string("bad config: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw config_error(e.what());
  }
  return parse_config(text, path.parent_path());
}

void validate(const ExperimentConfig& c) {
  if (c.databases.empty()) throw config_error("config lists no databases");
  if (c.cells.empty() && (c.doc_levels.empty() || c.query_levels.empty())) {
    throw config_error("config needs doc_levels and query_levels, or cells");
  }
  if (c.backend == Backend::kReplay && c.transcripts.empty()) {
    throw config_error("replay backend needs a transcripts directory");
  }
  if (c.concurrency == 0) throw config_error("concurrency must be at least 1");
  if (c.temperature < 0) throw config_error("temperature must be non-negative");
  if (c.timeout_seconds <= 0) throw config_error("timeout_seconds must be positive");
  std::set<std::string> names;
  for (const auto& d : c.databases) {
    if (d.name.empty()) throw config_error("database entry without a name");
    if (!names.insert(d.name).second) throw config_error("duplicate database " + d.name);
  }
}

std::size_t CellResult::count(ErrorClass c) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [&](const QueryRecord& r) { return r.error_class == c; }));
}

std::size_t CellResult::correct_by_execution() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const QueryRecord& r) {
    return r.error_class != ErrorClass::kCorrect && r.execution_match == true;
  }));
}

std::size_t CellResult::failures() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const QueryRecord& r) { return !r.failed_stage.empty(); }));
}

std::string CellResult::accuracy() const {
  if (records.empty()) return {};
  return text::percent_one_decimal(static_cast<long long>(correct()),
                                   static_cast<long long>(total()));
}

std::size_t Report::failures() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.failures();
  return n;
}

struct Experiment::Loaded {
  DatabaseConfig config;
  Schema schema;
  docs::DocSet docs;
  std::vector<RowSample> samples;
  sql::CanonicalOptions canonical;
};

Experiment::Experiment(ExperimentConfig config, llm::CompletionClient& client)
    : config_(std::move(config)), client_(client) {
  validate(config_);
  templates_ = config_.templates ? prompt::Templates::load(*config_.templates)
                                 : prompt::Templates::defaults();
  for (const auto& dbc : config_.databases) {
    auto l = std::make_unique<Loaded>();
    l->config = dbc;
    try {
      const Database db = Database::open(dbc.path);
      l->schema = db.extract_schema();
      l->samples = prompt::collect_samples(db, l->schema);
      l->docs = docs::load_docs(dbc.docs);
    } catch (const Error& e) {
      throw config_error("database " + dbc.name + ": " + e.what());
    }
    l->canonical.schema = &l->schema;
    loaded_.push_back(std::move(l));
  }
}

Experiment::~Experiment() = default;

QueryRecord Experiment::run_query(const Loaded& db, const docs::QuerySpec& spec, DocLevel doc_level,
                                  QueryLevel query_level, const Database& handle) {
  QueryRecord r;
  r.database = db.config.name;
  r.query_id = spec.id;
  r.doc_level = doc_level;
  r.query_level = query_level;
  const auto base = config_.base_request();

  std::string query_text;
  try {
    query_text = prompt::apply_query_disambiguation(spec, query_level);
  } catch (const Error& e) {
    return failed(std::move(r), "prompt", e.what());
  }

  if (prompt::needs_column_selection(doc_level)) {
    try {
      r.column_selection_hash = llm::request_hash(
          prompt::column_selection_request(query_text, db.schema, base, templates_));
      r.selected_columns = prompt::select_columns(query_text, db.schema, client_, base, templates_);
    } catch (const Error& e) {
      return failed(std::move(r), "column_selection", e.what());
    }
  }

  llm::CompletionRequest request;
  try {
    prompt::PromptOptions options;
    options.replace_per_column_family = config_.replace_per_column_family;
    const auto p = prompt::assemble_prompt(db.schema, db.docs, doc_level, query_level, spec,
                                           r.selected_columns, db.samples, options, templates_);
    request = p.request(base, templates_);
    r.prompt_hash = llm::request_hash(request);
  } catch (const Error& e) {
    return failed(std::move(r), "prompt", e.what());
  }

  std::string response;
  try {
    response = client_.complete(request);
  } catch (const Error& e) {
    return failed(std::move(r), "completion", e.what());
  }
  try {
    r.predicted_sql = llm::extract_sql(response);
  } catch (const Error& e) {
    return failed(std::move(r), "extraction", e.what());
  }

  sql::CanonicalQuery gold;
  try {
    gold = sql::canonicalize_sql(spec.gold_sql, db.canonical);
  } catch (const Error& e) {
    return failed(std::move(r), "gold", e.what());
  }
  try {
    const auto pred = sql::canonicalize_sql(r.predicted_sql, db.canonical);
    r.error_class = sql::classify_error(pred, gold);
    r.differing = sql::diff_components(pred, gold);
  } catch (const Error& e) {
    r = failed(std::move(r), "parse", e.what());
  }

  try {
    r.execution_match =
        sql::execution_match(handle, r.predicted_sql, spec.gold_sql, config_.execution_max_steps);
  } catch (const Error& e) {
    if (r.diagnostic.empty()) r.diagnostic = e.what();
  }
  return r;
}

CellResult Experiment::run_cell(DocLevel doc_level, QueryLevel query_level) {
  struct Job {
    std::size_t db;
    const docs::QuerySpec* spec;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < loaded_.size(); ++i) {
    for (const auto& q : loaded_[i]->docs.queries) jobs.push_back({i, &q});
  }

  CellResult cell;
  cell.doc_level = doc_level;
  cell.query_level = query_level;
  cell.records.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    try {
      std::map<std::size_t, Database> handles;
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        const Job& job = jobs[i];
        auto it = handles.find(job.db);
        if (it == handles.end()) {
          it = handles.emplace(job.db, Database::open(loaded_[job.db]->config.path)).first;
        }
        cell.records[i] = run_query(*loaded_[job.db], *job.spec, doc_level, query_level, it->second);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!first_error) first_error = std::current_exception();
      next = jobs.size();
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(config_.concurrency, jobs.size()));
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::sort(cell.records.begin(), cell.records.end(), [](const QueryRecord& a, const QueryRecord& b) {
    return std::tie(a.database, a.query_id) < std::tie(b.database, b.query_id);
  });
  return cell;
}

Report Experiment::run_grid() {
  Report report;
  for (const auto& c : config_.grid()) report.cells.push_back(run_cell(c.doc_level, c.query_level));
  return report;
}

BackendClient::BackendClient(const ExperimentConfig& config) {
  if (config.backend == Backend::kReplay) {
    if (!std::filesystem::is_directory(config.transcripts)) {
      throw config_error("transcript directory not found: " + config.transcripts.string());
    }
    inner_ = std::make_unique<llm::ReplayClient>(config.transcripts);
    return;
  }
  llm::HttpSettings settings;
  settings.endpoint = config.endpoint;
  if (const char* key = std::getenv(config.api_key_env.c_str())) settings.api_key = key;
  settings.timeout = std::chrono::seconds(config.timeout_seconds);
  settings.in_flight_cap = std::max<std::size_t>(1, config.concurrency);
  inner_ = std::make_unique<llm::HttpClient>(settings);
  if (!config.transcripts.empty()) {
    std::filesystem::create_directories(config.transcripts);
    store_ = std::make_unique<llm::TranscriptStore>(config.transcripts);
    recorder_ = std::make_unique<llm::RecordingClient>(*inner_, *store_);
  }
}

BackendClient::~BackendClient() = default;

std::string BackendClient::complete(const llm::CompletionRequest& request) {
  return recorder_ ? recorder_->complete(request) : inner_->complete(request);
}

std::string summary_csv(const Report& report) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& c : report.cells) {
    out += cell_key(c) + "," + std::to_string(c.total()) + "," + std::to_string(c.correct()) + "," +
           std::to_string(c.count(ErrorClass::kOutput)) + "," +
           std::to_string(c.count(ErrorClass::kFuzzy)) + "," +
           std::to_string(c.count(ErrorClass::kOther)) + "," + c.accuracy() + "\n";
  }
  return out;
}

std::string details_jsonl(const Report& report) {
  std::string out;
  for (const auto& c : report.cells) {
    for (const auto& r : c.records) {
      json j;
      j["database"] = r.database;
      j["query_id"] = r.query_id;
      j["doc_level"] = prompt::to_string(r.doc_level);
      j["query_level"] = prompt::to_string(r.query_level);
      j["selected_columns"] = json::array();
      for (const auto& col : r.selected_columns) j["selected_columns"].push_back(col.qualified());
      j["column_selection_hash"] = r.column_selection_hash;
      j["prompt_hash"] = r.prompt_hash;
      j["predicted_sql"] = r.predicted_sql;
      j["class"] = sql::to_string(r.error_class);
      j["differing"] = r.differing;
      j["execution_match"] = r.execution_match ? json(*r.execution_match) : json(nullptr);
      j["failed_stage"] = r.failed_stage;
      j["diagnostic"] = r.diagnostic;
      out += j.dump() + "\n";
    }
  }
  return out;
}

std::string plotdata_csv(const Report& report) {
  std::string out = "doc_level,query_level,class,count,percent\n";
  for (const auto& c : report.cells) {
    for (ErrorClass k : kClasses) {
      const auto n = c.count(k);
      const std::string pct =
          c.total() == 0 ? std::string()
                         : text::percent_one_decimal(static_cast<long long>(n),
                                                     static_cast<long long>(c.total()));
      out += cell_key(c) + "," + std::string(sql::to_string(k)) + "," + std::to_string(n) + "," +
             pct + "\n";
    }
  }
  return out;
}

std::string execution_csv(const Report& report) {
  std::string out =
      "doc_level,query_level,total,exact_correct,correct_by_execution,execution_failures\n";
  for (const auto& c : report.cells) {
    const auto exec_failures = std::count_if(c.records.begin(), c.records.end(),
                                             [](const QueryRecord& r) { return !r.execution_match; });
    out += cell_key(c) + "," + std::to_string(c.total()) + "," + std::to_string(c.correct()) + "," +
           std::to_string(c.correct_by_execution()) + "," + std::to_string(exec_failures) + "\n";
  }
  return out;
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "summary.csv", summary_csv(report));
  write_file(dir / "details.jsonl", details_jsonl(report));
  write_file(dir / "plotdata.csv", plotdata_csv(report));
  write_file(dir / "execution.csv", execution_csv(report));
}

Report parse_details(std::string_view jsonl) {
  Report report;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      QueryRecord r;
      r.database = j.at("database").get<std::string>();
      r.query_id = j.at("query_id").get<std::string>();
      r.doc_level = prompt::parse_doc_level(j.at("doc_level").get<std::string>());
      r.query_level = prompt::parse_query_level(j.at("query_level").get<std::string>());
      for (const auto& col : j.at("selected_columns")) {
        const auto s = col.get<std::string>();
        const auto dot = s.find('.');
        r.selected_columns.push_back({s.substr(0, dot), dot == std::string::npos ? "" : s.substr(dot + 1)});
      }
      r.column_selection_hash = j.at("column_selection_hash").get<std::string>();
      r.prompt_hash = j.at("prompt_hash").get<std::string>();
      r.predicted_sql = j.at("predicted_sql").get<std::string>();
      r.error_class = parse_class(j.at("class").get<std::string>());
      r.differing = j.at("differing").get<std::vector<std::string>>();
      if (!j.at("execution_match").is_null()) r.execution_match = j["execution_match"].get<bool>();
      r.failed_stage = j.at("failed_stage").get<std::string>();
      r.diagnostic = j.at("diagnostic").get<std::string>();

      const std::string key = std::string(prompt::to_string(r.doc_level)) + "," +
                              std::string(prompt::to_string(r.query_level));
      auto it = index.find(key);
      if (it == index.end()) {
        CellResult cell;
        cell.doc_level = r.doc_level;
        cell.query_level = r.query_level;
        report.cells.push_back(std::move(cell));
        it = index.emplace(key, report.cells.size() - 1).first;
      }
      report.cells[it->second].records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(line_no, "", std::string("bad details record: ") + e.what());
    }
  }
  return report;
}

Report load_report(const std::filesystem::path& dir) {
  return parse_details(read_file(dir / "details.jsonl"));
}

}  // namespace ambidoc::harness

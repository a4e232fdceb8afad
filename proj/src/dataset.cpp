#include "ambidoc/dataset.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <memory>
#include <fstream>
#include <sstream>
#include <utility>

#include "ambidoc/error.hpp"
#include "ambidoc/text.hpp"

namespace ambidoc {

namespace {

class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql) {
    const char* tail = nullptr;
    const int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()),
                                      &stmt_, &tail);
    if (rc != SQLITE_OK) {
      error_ = sqlite3_errmsg(db);
      code_ = rc;
      return;
    }
    if (stmt_ == nullptr) {
      error_ = "empty statement";
      code_ = SQLITE_MISUSE;
      return;
    }
    if (tail != nullptr) {
      rest_ = std::string_view(tail, sql.data() + sql.size() - tail);
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  bool ok() const { return stmt_ != nullptr; }
  const std::string& error() const { return error_; }
  int code() const { return code_; }
  std::string_view rest() const { return rest_; }
  sqlite3_stmt* get() const { return stmt_; }

 private:
  sqlite3_stmt* stmt_ = nullptr;
  std::string error_;
  int code_ = SQLITE_OK;
  std::string_view rest_;
};

Value read_column(sqlite3_stmt* stmt, int i) {
  switch (sqlite3_column_type(stmt, i)) {
    case SQLITE_INTEGER:
      return static_cast<std::int64_t>(sqlite3_column_int64(stmt, i));
    case SQLITE_FLOAT:
      return sqlite3_column_double(stmt, i);
    case SQLITE_TEXT: {
      const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
      return std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt, i)));
    }
    case SQLITE_BLOB: {
      const auto* p = static_cast<const char*>(sqlite3_column_blob(stmt, i));
      const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt, i));
      return p == nullptr ? std::string() : std::string(p, n);
    }
    default:
      return std::monostate{};
  }
}

int progress_abort(void* budget) {
  auto* remaining = static_cast<std::uint64_t*>(budget);
  if (*remaining == 0) return 1;
  --*remaining;
  return 0;
}

constexpr int kProgressGranularity = 1000;

bool only_terminators(std::string_view s) {
  for (char c : s) {
    if (c != ';' && !std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

sqlite3* open_writable(const std::filesystem::path& target) {
  if (std::filesystem::exists(target)) {
    throw Error(ErrorCode::kIoError, "refusing to overwrite " + target.string());
  }
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(target.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE,
                      nullptr) != SQLITE_OK) {
    std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw Error(ErrorCode::kIoError, "cannot create " + target.string() + ": " + msg);
  }
  return db;
}

void exec_or_throw(sqlite3* db, const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::kIoError, msg);
  }
}

}  // namespace

std::string to_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "NULL";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          std::string s = text::format_number(x);
          if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
          return s;
        } else {
          return x;
        }
      },
      v);
}

std::string to_sql_literal(const Value& v) {
  if (is_null(v)) return "NULL";
  if (const auto* s = std::get_if<std::string>(&v)) {
    std::string out = "'";
    for (char c : *s) {
      if (c == '\'') out += '\'';
      out += c;
    }
    return out + "'";
  }
  return to_text(v);
}

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::optional<std::size_t> TableDef::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (text::iequals(columns[i].name, column)) return i;
  }
  return std::nullopt;
}

const TableDef* Schema::find_table(std::string_view name) const {
  auto idx = table_index(name);
  return idx ? &tables[*idx] : nullptr;
}

std::optional<std::size_t> Schema::table_index(std::string_view name) const {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (text::iequals(tables[i].name, name)) return i;
  }
  return std::nullopt;
}

Database::Database(sqlite3* db, std::filesystem::path path)
    : db_(db), path_(std::move(path)) {}

Database::Database(Database&& other) noexcept
    : db_(std::exchange(other.db_, nullptr)),
      path_(std::move(other.path_)),
      schema_cache_(std::move(other.schema_cache_)) {}

Database& Database::operator=(Database&& other) noexcept {
  if (this != &other) {
    sqlite3_close(db_);
    db_ = std::exchange(other.db_, nullptr);
    path_ = std::move(other.path_);
    schema_cache_ = std::move(other.schema_cache_);
  }
  return *this;
}

Database::~Database() { sqlite3_close(db_); }

Database Database::open(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kFileNotFound, "no such database file: " + path.string());
  }
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.c_str(), &raw,
                                 SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
  Database db(raw, path);
  if (rc != SQLITE_OK) {
    throw Error(ErrorCode::kFileNotFound,
                "cannot open " + path.string() + ": " + sqlite3_errstr(rc));
  }
  Statement probe(raw, "SELECT count(*) FROM sqlite_master");
  int step = probe.ok() ? sqlite3_step(probe.get()) : probe.code();
  if (!probe.ok() || (step != SQLITE_ROW && step != SQLITE_DONE)) {
    throw Error(ErrorCode::kNotADatabase,
                path.string() + " is not a database: " + sqlite3_errmsg(raw));
  }
  exec_or_throw(raw, "PRAGMA query_only = 1");
  return db;
}

Schema Database::extract_schema() const {
  if (schema_cache_) return *schema_cache_;
  Schema schema;
  {
    Statement st(db_,
                 "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE "
                 "'sqlite\\_%' ESCAPE '\\' ORDER BY rowid");
    if (!st.ok()) throw Error(ErrorCode::kNotADatabase, st.error());
    while (sqlite3_step(st.get()) == SQLITE_ROW) {
      TableDef t;
      t.name = std::get<std::string>(read_column(st.get(), 0));
      schema.tables.push_back(std::move(t));
    }
  }
  for (auto& table : schema.tables) {
    Statement info(db_, "PRAGMA table_info(" + quote_identifier(table.name) + ")");
    std::vector<std::pair<std::int64_t, std::string>> pk;
    while (info.ok() && sqlite3_step(info.get()) == SQLITE_ROW) {
      ColumnDef col;
      col.name = to_text(read_column(info.get(), 1));
      const Value type = read_column(info.get(), 2);
      col.declared_type = is_null(type) ? "" : to_text(type);
      col.nullable = sqlite3_column_int(info.get(), 3) == 0;
      const auto pk_pos = sqlite3_column_int64(info.get(), 5);
      if (pk_pos > 0) pk.emplace_back(pk_pos, col.name);
      table.columns.push_back(std::move(col));
    }
    std::sort(pk.begin(), pk.end());
    for (auto& [pos, name] : pk) table.primary_key.push_back(name);
  }
  // Foreign keys need every table's columns first.
  for (auto& table : schema.tables) {
    Statement fks(db_, "PRAGMA foreign_key_list(" + quote_identifier(table.name) + ")");
    while (fks.ok() && sqlite3_step(fks.get()) == SQLITE_ROW) {
      const std::string foreign = to_text(read_column(fks.get(), 2));
      const std::string from = to_text(read_column(fks.get(), 3));
      const Value to = read_column(fks.get(), 4);
      const TableDef* target = schema.find_table(foreign);
      if (target == nullptr) continue;
      std::string to_col;
      if (is_null(to)) {
        if (target->primary_key.size() != 1) continue;
        to_col = target->primary_key.front();
      } else {
        auto idx = target->column_index(to_text(to));
        if (!idx) continue;
        to_col = target->columns[*idx].name;
      }
      auto from_idx = table.column_index(from);
      if (!from_idx) continue;
      table.foreign_keys.push_back({table.columns[*from_idx].name, target->name, to_col});
    }
  }
  schema_cache_ = schema;
  return schema;
}

const TableDef& Database::require_table(std::string_view table) const {
  if (!schema_cache_) extract_schema();
  const TableDef* def = schema_cache_->find_table(table);
  if (def == nullptr) {
    throw Error(ErrorCode::kUnknownTable, "unknown table: " + std::string(table));
  }
  return *def;
}

RowSample Database::sample_rows(std::string_view table, std::size_t n) const {
  const TableDef& def = require_table(table);
  RowSample sample;
  sample.table = def.name;
  sample.requested = n;
  for (const auto& c : def.columns) sample.columns.push_back(c.name);
  if (n == 0) return sample;
  ResultSet rs = execute("SELECT * FROM " + quote_identifier(def.name) + " LIMIT " +
                         std::to_string(n));
  sample.rows = std::move(rs.rows);
  return sample;
}

void Database::for_each_value(std::string_view table, std::string_view column,
                              std::optional<std::size_t> limit,
                              const std::function<bool(const Value&)>& fn) const {
  const TableDef& def = require_table(table);
  auto idx = def.column_index(column);
  if (!idx) {
    throw Error(ErrorCode::kUnknownColumn,
                "unknown column: " + std::string(table) + "." + std::string(column));
  }
  if (limit && *limit == 0) return;
  std::string sql = "SELECT " + quote_identifier(def.columns[*idx].name) + " FROM " +
                    quote_identifier(def.name);
  if (limit) sql += " LIMIT " + std::to_string(*limit);
  Statement st(db_, sql);
  if (!st.ok()) throw Error(ErrorCode::kExecutionError, st.error());
  while (sqlite3_step(st.get()) == SQLITE_ROW) {
    if (!fn(read_column(st.get(), 0))) break;
  }
}

std::vector<Value> Database::column_values(std::string_view table, std::string_view column,
                                           std::optional<std::size_t> limit) const {
  std::vector<Value> out;
  for_each_value(table, column, limit, [&](const Value& v) {
    out.push_back(v);
    return true;
  });
  return out;
}

ResultSet Database::table_rows(std::string_view table) const {
  const TableDef& def = require_table(table);
  return execute("SELECT * FROM " + quote_identifier(def.name));
}

ResultSet Database::execute(std::string_view sql, std::uint64_t max_steps) const {
  Statement st(db_, sql);
  if (!st.ok()) throw Error(ErrorCode::kExecutionError, st.error());
  if (!only_terminators(st.rest())) {
    throw Error(ErrorCode::kExecutionError, "expected a single statement");
  }
  if (sqlite3_stmt_readonly(st.get()) == 0) {
    throw Error(ErrorCode::kExecutionError, "statement is not read-only");
  }
  std::uint64_t budget = max_steps / kProgressGranularity + 1;
  if (max_steps > 0) sqlite3_progress_handler(db_, kProgressGranularity, progress_abort, &budget);
  ResultSet rs;
  const int ncol = sqlite3_column_count(st.get());
  for (int i = 0; i < ncol; ++i) rs.columns.emplace_back(sqlite3_column_name(st.get(), i));
  int rc;
  while ((rc = sqlite3_step(st.get())) == SQLITE_ROW) {
    std::vector<Value> row;
    row.reserve(static_cast<std::size_t>(ncol));
    for (int i = 0; i < ncol; ++i) row.push_back(read_column(st.get(), i));
    rs.rows.push_back(std::move(row));
  }
  if (max_steps > 0) sqlite3_progress_handler(db_, 0, nullptr, nullptr);
  if (rc != SQLITE_DONE) {
    std::string msg = rc == SQLITE_INTERRUPT ? "step budget exhausted" : sqlite3_errmsg(db_);
    throw Error(ErrorCode::kExecutionError, msg);
  }
  return rs;
}

std::vector<std::vector<std::optional<std::string>>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::optional<std::string>>> records;
  std::vector<std::optional<std::string>> record;
  std::string field;
  bool quoted = false;       // current field was quoted
  bool in_quotes = false;    // inside an open quote
  bool field_started = false;
  auto end_field = [&] {
    if (quoted || !field.empty()) {
      record.emplace_back(std::move(field));
    } else {
      record.emplace_back(std::nullopt);
    }
    field.clear();
    quoted = false;
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      ++i;
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kParseError, "unterminated quoted CSV field");
  if (field_started || !record.empty()) end_record();
  return records;
}

namespace {

bool parses_integer(const std::string& s) {
  std::int64_t v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool parses_real(const std::string& s) {
  double v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

}  // namespace

void import_csv(const std::vector<std::filesystem::path>& csv_files,
                const std::filesystem::path& target) {
  sqlite3* db = open_writable(target);
  std::unique_ptr<sqlite3, decltype(&sqlite3_close)> guard(db, sqlite3_close);
  exec_or_throw(db, "BEGIN");
  for (const auto& file : csv_files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::kFileNotFound, "cannot read " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto records = parse_csv(buf.str());
    if (records.empty()) throw Error(ErrorCode::kParseError, file.string() + ": missing header");
    const auto& header = records.front();
    const std::size_t arity = header.size();
    std::vector<std::string> names;
    for (std::size_t i = 0; i < arity; ++i) {
      std::string name = header[i].value_or("");
      if (name.empty()) name = "column" + std::to_string(i + 1);
      for (const auto& prev : names) {
        if (text::iequals(prev, name)) {
          throw Error(ErrorCode::kParseError,
                      file.string() + ": duplicate column name " + name);
        }
      }
      names.push_back(std::move(name));
    }
    std::vector<std::string> affinity(arity, "INTEGER");
    std::vector<bool> seen(arity, false);
    for (std::size_t r = 1; r < records.size(); ++r) {
      if (records[r].size() != arity) {
        throw Error(ErrorCode::kParseError, file.string() + ": record " + std::to_string(r + 1) +
                                                " has " + std::to_string(records[r].size()) +
                                                " fields, expected " + std::to_string(arity));
      }
      for (std::size_t c = 0; c < arity; ++c) {
        const auto& f = records[r][c];
        if (!f) continue;
        seen[c] = true;
        if (affinity[c] == "INTEGER" && !parses_integer(*f)) affinity[c] = "REAL";
        if (affinity[c] == "REAL" && !parses_real(*f)) affinity[c] = "TEXT";
      }
    }
    std::string ddl = "CREATE TABLE " + quote_identifier(file.stem().string()) + " (";
    std::string insert = "INSERT INTO " + quote_identifier(file.stem().string()) + " VALUES (";
    for (std::size_t c = 0; c < arity; ++c) {
      if (c > 0) {
        ddl += ", ";
        insert += ", ";
      }
      ddl += quote_identifier(names[c]) + " " + (seen[c] ? affinity[c] : "TEXT");
      insert += "?";
    }
    exec_or_throw(db, ddl + ")");
    insert += ")";
    Statement st(db, insert);
    if (!st.ok()) throw Error(ErrorCode::kIoError, st.error());
    for (std::size_t r = 1; r < records.size(); ++r) {
      sqlite3_reset(st.get());
      for (std::size_t c = 0; c < arity; ++c) {
        const auto& f = records[r][c];
        const int pos = static_cast<int>(c + 1);
        if (!f) {
          sqlite3_bind_null(st.get(), pos);
        } else {
          sqlite3_bind_text(st.get(), pos, f->c_str(), static_cast<int>(f->size()),
                            SQLITE_TRANSIENT);
        }
      }
      if (sqlite3_step(st.get()) != SQLITE_DONE) {
        throw Error(ErrorCode::kIoError, sqlite3_errmsg(db));
      }
    }
  }
  exec_or_throw(db, "COMMIT");
}

void create_database_from_script(const std::filesystem::path& target,
                                 std::string_view script) {
  sqlite3* db = open_writable(target);
  std::unique_ptr<sqlite3, decltype(&sqlite3_close)> guard(db, sqlite3_close);
  exec_or_throw(db, std::string(script));
}

}  // namespace ambidoc

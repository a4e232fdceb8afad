#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace ambidoc {

// One cell as stored by the database engine. Blobs are carried as raw bytes
// in the string alternative.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

inline bool is_null(const Value& v) {
  return std::holds_alternative<std::monostate>(v);
}

// Text rendering used by the profiler and prompt samples. NULL renders as
// "NULL"; reals use the shortest round-trip form.
std::string to_text(const Value& v);

// SQL-literal rendering ('quoted' strings, NULL keyword).
std::string to_sql_literal(const Value& v);

struct ColumnDef {
  std::string name;
  std::string declared_type;
  bool nullable = true;

  friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

struct ForeignKey {
  std::string local_column;
  std::string foreign_table;
  std::string foreign_column;

  friend bool operator==(const ForeignKey&, const ForeignKey&) = default;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  std::vector<std::string> primary_key;
  std::vector<ForeignKey> foreign_keys;

  // Case-insensitive lookup; nullopt when absent.
  std::optional<std::size_t> column_index(std::string_view column) const;

  friend bool operator==(const TableDef&, const TableDef&) = default;
};

struct Schema {
  std::vector<TableDef> tables;

  const TableDef* find_table(std::string_view name) const;
  std::optional<std::size_t> table_index(std::string_view name) const;
  bool empty() const { return tables.empty(); }

  friend bool operator==(const Schema&, const Schema&) = default;
};

// A column reference with names spelled as declared in the schema.
struct ColumnRef {
  std::string table;
  std::string column;

  std::string qualified() const { return table + "." + column; }
  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
  friend auto operator<=>(const ColumnRef&, const ColumnRef&) = default;
};

struct RowSample {
  std::string table;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  std::size_t requested = 0;
};

// Result of running an arbitrary statement.
struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
};

// Read-only handle on a single-file SQLite database. Handles are movable,
// not copyable, and must stay on one thread.
class Database {
 public:
  // Throws Error{kFileNotFound} or Error{kNotADatabase}.
  static Database open(const std::filesystem::path& path);

  Database(Database&&) noexcept;
  Database& operator=(Database&&) noexcept;
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;
  ~Database();

  const std::filesystem::path& path() const { return path_; }

  // Tables, columns in declared order, primary keys and resolvable foreign
  // keys. Dangling foreign keys are dropped.
  Schema extract_schema() const;

  // First min(n, rowCount) rows in storage order.
  RowSample sample_rows(std::string_view table, std::size_t n = 5) const;

  // Streams up to limit values (nulls included) in storage order.
  // The callback returns false to stop early.
  void for_each_value(std::string_view table, std::string_view column,
                      std::optional<std::size_t> limit,
                      const std::function<bool(const Value&)>& fn) const;

  std::vector<Value> column_values(
      std::string_view table, std::string_view column,
      std::optional<std::size_t> limit = std::nullopt) const;

  // All rows of a table, storage order.
  ResultSet table_rows(std::string_view table) const;

  // Runs one read-only statement. Throws Error{kExecutionError} with the
  // engine message on failure. max_steps bounds VM work (0 = unbounded).
  ResultSet execute(std::string_view sql, std::uint64_t max_steps = 0) const;

 private:
  explicit Database(sqlite3* db, std::filesystem::path path);

  // Resolves names case-insensitively to declared spelling.
  const TableDef& require_table(std::string_view table) const;

  sqlite3* db_ = nullptr;
  std::filesystem::path path_;
  mutable std::optional<Schema> schema_cache_;
};

// Double-quoted SQL identifier.
std::string quote_identifier(std::string_view name);

// Materializes RFC-4180 CSV files (header row required) into a new database
// file, one table per CSV named after the file stem. Unquoted empty fields
// become NULL; columns whose non-null values all parse as integers or reals
// get INTEGER/REAL affinity, others TEXT. The target must not exist.
void import_csv(const std::vector<std::filesystem::path>& csv_files,
                const std::filesystem::path& target);

// Parses one RFC-4180 document. Each record is a list of fields; a field is
// nullopt when it was empty and unquoted.
std::vector<std::vector<std::optional<std::string>>> parse_csv(
    std::string_view text);

// Runs a SQL script into a new database file. Used for building fixtures;
// the read-only Database handle never writes.
void create_database_from_script(const std::filesystem::path& target,
                                 std::string_view script);

}  // namespace ambidoc

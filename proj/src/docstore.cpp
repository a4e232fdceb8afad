#include "ambidoc/docstore.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ambidoc/error.hpp"
#include "ambidoc/text.hpp"

namespace ambidoc::docs {

using nlohmann::json;

namespace {

constexpr std::string_view kFormatTag = "ambidoc-docs/1";

std::string kind_slug(DocKind kind) {
  switch (kind) {
    case DocKind::kNameDescription: return "name_description";
    case DocKind::kValueConsistency: return "value_consistency";
    case DocKind::kCoverage: return "coverage";
    case DocKind::kGranularity: return "granularity";
  }
  return "unknown";
}

bool same_scope(const Scope& a, const Scope& b) {
  if (!text::iequals(a.table, b.table)) return false;
  if (a.column.has_value() != b.column.has_value()) return false;
  return !a.column || text::iequals(*a.column, *b.column);
}

std::string get_string(const json& obj, const std::string& key, const std::string& path,
                       bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw ParseError(0, path + "." + key, "missing required field");
    return {};
  }
  if (!it->is_string()) throw ParseError(0, path + "." + key, "expected a string");
  return it->get<std::string>();
}

std::optional<std::string> get_optional(const json& obj, const std::string& key,
                                        const std::string& path) {
  if (!obj.contains(key)) return std::nullopt;
  return get_string(obj, key, path, true);
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(0, path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

std::size_t line_of(std::string_view textv, std::size_t byte) {
  byte = std::min(byte, textv.size());
  return 1 + static_cast<std::size_t>(std::count(textv.begin(), textv.begin() + byte, '\n'));
}

}  // namespace

std::string_view to_string(DocKind kind) {
  switch (kind) {
    case DocKind::kNameDescription: return "NameDescription";
    case DocKind::kValueConsistency: return "ValueConsistency";
    case DocKind::kCoverage: return "Coverage";
    case DocKind::kGranularity: return "Granularity";
  }
  return "Unknown";
}

std::string_view to_string(Provenance p) {
  return p == Provenance::kDraft ? "draft" : "human";
}

DocKind parse_kind(std::string_view s) {
  for (auto k : {DocKind::kNameDescription, DocKind::kValueConsistency, DocKind::kCoverage,
                 DocKind::kGranularity}) {
    if (s == to_string(k) || s == kind_slug(k)) return k;
  }
  throw Error(ErrorCode::kUnknownKind, "unknown documentation kind: " + std::string(s));
}

std::string draft_id(DocKind kind, const Scope& scope) {
  std::string id = "draft/" + kind_slug(kind) + "/" + text::to_lower(scope.table);
  if (scope.column) id += "/" + text::to_lower(*scope.column);
  return id;
}

std::string docs_file_name(std::string_view database) {
  return std::string(database) + ".docs.json";
}

void validate(const DocSet& set) {
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    const auto& e = set.entries[i];
    const std::string path = "entries[" + std::to_string(i) + "]";
    if (e.id.empty()) throw ParseError(0, path + ".id", "empty id");
    if (!ids.insert(e.id).second) throw ParseError(0, path + ".id", "duplicate id " + e.id);
    if (e.scope.table.empty()) throw ParseError(0, path + ".table", "empty table");
    if (is_column_scoped(e.kind) && (!e.scope.column || e.scope.column->empty())) {
      throw ParseError(0, path + ".column",
                       std::string(to_string(e.kind)) + " entries need a column scope");
    }
    if (!is_column_scoped(e.kind) && e.scope.column) {
      throw ParseError(0, path + ".column",
                       std::string(to_string(e.kind)) + " entries are table-scoped");
    }
    if (text::trim(e.text).empty()) throw ParseError(0, path + ".text", "empty text");
  }
  std::unordered_set<std::string> query_ids;
  for (std::size_t i = 0; i < set.queries.size(); ++i) {
    const auto& q = set.queries[i];
    const std::string path = "queries[" + std::to_string(i) + "]";
    if (q.id.empty()) throw ParseError(0, path + ".id", "empty id");
    if (!query_ids.insert(q.id).second) throw ParseError(0, path + ".id", "duplicate id " + q.id);
    if (text::trim(q.original_text).empty()) {
      throw ParseError(0, path + ".original", "empty original text");
    }
    if (text::trim(q.gold_sql).empty()) throw ParseError(0, path + ".gold_sql", "empty gold SQL");
    if (q.term_disambiguated_text && *q.term_disambiguated_text == q.original_text) {
      throw ParseError(0, path + ".term_disambiguated",
                       "term-disambiguated text must differ from the original");
    }
    if (!q.database.empty() && q.database != set.database) {
      throw ParseError(0, path + ".database", "query belongs to another database");
    }
  }
}

std::vector<std::string> dangling_scopes(const DocSet& set, const Schema& schema) {
  std::vector<std::string> out;
  for (const auto& e : set.entries) {
    const TableDef* t = schema.find_table(e.scope.table);
    if (t == nullptr) {
      out.push_back(e.scope.table);
    } else if (e.scope.column && !t->column_index(*e.scope.column)) {
      out.push_back(e.scope.table + "." + *e.scope.column);
    }
  }
  return out;
}

DocSet parse_docs(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of(json_text, e.byte == 0 ? 0 : e.byte - 1), "", e.what());
  }
  if (!doc.is_object()) throw ParseError(1, "", "top level must be an object");
  reject_unknown_keys(doc, {"format", "database", "entries", "queries"}, "");
  if (doc.contains("format") && doc["format"] != kFormatTag) {
    throw ParseError(0, "format", "unsupported format tag");
  }
  DocSet set;
  set.database = get_string(doc, "database", "", true);
  if (doc.contains("entries")) {
    if (!doc["entries"].is_array()) throw ParseError(0, "entries", "expected an array");
    std::size_t i = 0;
    for (const auto& e : doc["entries"]) {
      const std::string path = "entries[" + std::to_string(i++) + "]";
      if (!e.is_object()) throw ParseError(0, path, "expected an object");
      reject_unknown_keys(e, {"id", "kind", "table", "column", "text", "provenance"}, path);
      DocEntry entry;
      entry.id = get_string(e, "id", path, true);
      entry.kind = parse_kind(get_string(e, "kind", path, true));
      entry.scope.table = get_string(e, "table", path, true);
      entry.scope.column = get_optional(e, "column", path);
      entry.text = get_string(e, "text", path, true);
      const std::string prov = get_string(e, "provenance", path, false);
      if (prov.empty() || prov == "human") {
        entry.provenance = Provenance::kHuman;
      } else if (prov == "draft") {
        entry.provenance = Provenance::kDraft;
      } else {
        throw ParseError(0, path + ".provenance", "expected \"draft\" or \"human\"");
      }
      set.entries.push_back(std::move(entry));
    }
  }
  if (doc.contains("queries")) {
    if (!doc["queries"].is_array()) throw ParseError(0, "queries", "expected an array");
    std::size_t i = 0;
    for (const auto& q : doc["queries"]) {
      const std::string path = "queries[" + std::to_string(i++) + "]";
      if (!q.is_object()) throw ParseError(0, path, "expected an object");
      reject_unknown_keys(q,
                          {"id", "original", "term_disambiguated", "output_schema", "gold_sql",
                           "gold_fix_notes"},
                          path);
      QuerySpec spec;
      spec.id = get_string(q, "id", path, true);
      spec.database = set.database;
      spec.original_text = get_string(q, "original", path, true);
      spec.term_disambiguated_text = get_optional(q, "term_disambiguated", path);
      spec.output_schema_clause = get_optional(q, "output_schema", path);
      spec.gold_sql = get_string(q, "gold_sql", path, true);
      spec.gold_fix_notes = get_optional(q, "gold_fix_notes", path);
      set.queries.push_back(std::move(spec));
    }
  }
  validate(set);
  return set;
}

std::string serialize_docs(const DocSet& set) {
  validate(set);
  json doc = json::object();
  doc["format"] = kFormatTag;
  doc["database"] = set.database;
  doc["entries"] = json::array();
  for (const auto& e : set.entries) {
    json j = json::object();
    j["id"] = e.id;
    j["kind"] = kind_slug(e.kind);
    j["table"] = e.scope.table;
    if (e.scope.column) j["column"] = *e.scope.column;
    j["text"] = e.text;
    j["provenance"] = to_string(e.provenance);
    doc["entries"].push_back(std::move(j));
  }
  doc["queries"] = json::array();
  for (const auto& q : set.queries) {
    json j = json::object();
    j["id"] = q.id;
    j["original"] = q.original_text;
    if (q.term_disambiguated_text) j["term_disambiguated"] = *q.term_disambiguated_text;
    if (q.output_schema_clause) j["output_schema"] = *q.output_schema_clause;
    j["gold_sql"] = q.gold_sql;
    if (q.gold_fix_notes) j["gold_fix_notes"] = *q.gold_fix_notes;
    doc["queries"].push_back(std::move(j));
  }
  try {
    return doc.dump(2) + "\n";
  } catch (const json::type_error& e) {
    throw ParseError(0, "", std::string("cannot serialize: ") + e.what());
  }
}

DocSet load_docs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_docs(buf.str());
}

void save_docs(const DocSet& set, const std::filesystem::path& path) {
  const std::string body = serialize_docs(set);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << body;
    if (!out) throw Error(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot move " + tmp.string() + ": " + ec.message());
}

DocSet merge_draft(const DocSet& existing, const std::vector<DocEntry>& drafts) {
  DocSet out = existing;
  for (const auto& draft : drafts) {
    if (draft.provenance != Provenance::kDraft) {
      throw Error(ErrorCode::kConfigError, "merge_draft expects draft entries, got " + draft.id);
    }
    auto same = std::find_if(out.entries.begin(), out.entries.end(), [&](const DocEntry& e) {
      return e.kind == draft.kind && same_scope(e.scope, draft.scope);
    });
    if (same != out.entries.end()) {
      if (same->provenance == Provenance::kHuman) continue;
      const std::string keep_id = same->id;
      *same = draft;
      same->id = keep_id;
      continue;
    }
    DocEntry added = draft;
    auto taken = [&](const std::string& id) {
      return std::any_of(out.entries.begin(), out.entries.end(),
                         [&](const DocEntry& e) { return e.id == id; });
    };
    for (int n = 2; taken(added.id); ++n) added.id = draft.id + "#" + std::to_string(n);
    out.entries.push_back(std::move(added));
  }
  return out;
}

std::vector<DocEntry> docs_for(const DocSet& set, DocKind kind,
                               const std::set<std::string>& tables,
                               const std::optional<std::set<ColumnRef>>& columns,
                               const Schema* schema) {
  auto table_wanted = [&](const std::string& t) {
    return std::any_of(tables.begin(), tables.end(),
                       [&](const std::string& x) { return text::iequals(x, t); });
  };
  auto column_wanted = [&](const Scope& s) {
    if (!columns) return true;
    return std::any_of(columns->begin(), columns->end(), [&](const ColumnRef& c) {
      return text::iequals(c.table, s.table) && s.column && text::iequals(c.column, *s.column);
    });
  };
  std::vector<DocEntry> out;
  for (const auto& e : set.entries) {
    if (e.kind != kind || !table_wanted(e.scope.table)) continue;
    if (is_column_scoped(kind) && !column_wanted(e.scope)) continue;
    out.push_back(e);
  }
  if (schema != nullptr) {
    constexpr auto kLast = std::numeric_limits<std::size_t>::max();
    auto position = [&](const DocEntry& e) {
      const auto t = schema->table_index(e.scope.table);
      if (!t) return std::pair{kLast, kLast};
      std::size_t c = 0;
      if (e.scope.column) c = schema->tables[*t].column_index(*e.scope.column).value_or(kLast);
      return std::pair{*t, c};
    };
    std::stable_sort(out.begin(), out.end(), [&](const DocEntry& a, const DocEntry& b) {
      return position(a) < position(b);
    });
  }
  return out;
}

}  // namespace ambidoc::docs

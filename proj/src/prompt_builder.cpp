#include "ambidoc/prompt_builder.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ambidoc/error.hpp"
#include "ambidoc/text.hpp"
#include "default_templates.hpp"

namespace ambidoc::prompt {

namespace {

using docs::DocKind;

const std::vector<std::pair<DocLevel, std::string_view>> kDocLevelNames = {
    {DocLevel::kSchemaOnly, "SchemaOnly"},
    {DocLevel::kPlusSample, "PlusSample"},
    {DocLevel::kPlusNameDesc, "PlusNameDesc"},
    {DocLevel::kPlusValueConsistency, "PlusValueConsistency"},
    {DocLevel::kPlusCoverage, "PlusCoverage"},
    {DocLevel::kPlusGranularity, "PlusGranularity"},
};

const std::vector<std::pair<QueryLevel, std::string_view>> kQueryLevelNames = {
    {QueryLevel::kOriginal, "Original"},
    {QueryLevel::kOutputSchemaOnly, "OutputSchemaOnly"},
    {QueryLevel::kFullyDisambiguated, "FullyDisambiguated"},
};

std::string strip_final_newline(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

// Reads one name at pos (quoted or bare). Empty when there is none.
std::string read_name_part(std::string_view s, std::size_t& pos) {
  if (pos >= s.size()) return {};
  const char c = s[pos];
  char close = 0;
  if (c == '`') close = '`';
  if (c == '"') close = '"';
  if (c == '[') close = ']';
  if (close) {
    const auto end = s.find(close, pos + 1);
    if (end == std::string_view::npos) return {};
    std::string out(s.substr(pos + 1, end - pos - 1));
    pos = end + 1;
    return out;
  }
  const std::size_t start = pos;
  while (pos < s.size() && is_name_char(s[pos])) ++pos;
  return std::string(s.substr(start, pos - start));
}

struct NameToken {
  std::optional<std::string> table;
  std::string column;
};

std::vector<NameToken> scan_names(std::string_view s) {
  std::vector<NameToken> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t probe = pos;
    std::string first = read_name_part(s, probe);
    if (first.empty()) {
      pos = std::max(probe, pos + 1);
      continue;
    }
    pos = probe;
    if (pos + 1 < s.size() && s[pos] == '.') {
      std::size_t after = pos + 1;
      std::string second = read_name_part(s, after);
      if (!second.empty()) {
        out.push_back({std::move(first), std::move(second)});
        pos = after;
        continue;
      }
    }
    out.push_back({std::nullopt, std::move(first)});
  }
  return out;
}

std::vector<ColumnRef> first_columns(const Schema& schema, std::size_t cap) {
  std::vector<ColumnRef> out;
  for (const auto& t : schema.tables) {
    for (const auto& c : t.columns) {
      if (out.size() >= cap) return out;
      out.push_back({t.name, c.name});
    }
  }
  return out;
}

bool shows(DocLevel level, DocKind kind) {
  switch (kind) {
    case DocKind::kNameDescription:
      return level == DocLevel::kPlusNameDesc;
    case DocKind::kValueConsistency:
      return level >= DocLevel::kPlusValueConsistency;
    case DocKind::kCoverage:
      return level >= DocLevel::kPlusCoverage;
    case DocKind::kGranularity:
      return level >= DocLevel::kPlusGranularity;
  }
  return false;
}

bool shows_samples(DocLevel level, bool replace) {
  if (level == DocLevel::kPlusSample) return true;
  return !replace && level == DocLevel::kPlusNameDesc;
}

std::string render_row(const std::vector<std::string>& cells) { return text::join(cells, " | "); }

}  // namespace

std::string_view to_string(DocLevel level) {
  for (const auto& [l, name] : kDocLevelNames) {
    if (l == level) return name;
  }
  return "Unknown";
}

std::string_view to_string(QueryLevel level) {
  for (const auto& [l, name] : kQueryLevelNames) {
    if (l == level) return name;
  }
  return "Unknown";
}

DocLevel parse_doc_level(std::string_view s) {
  for (const auto& [l, name] : kDocLevelNames) {
    if (text::iequals(s, name)) return l;
  }
  throw Error(ErrorCode::kConfigError, "unknown documentation level: " + std::string(s));
}

QueryLevel parse_query_level(std::string_view s) {
  for (const auto& [l, name] : kQueryLevelNames) {
    if (text::iequals(s, name)) return l;
  }
  throw Error(ErrorCode::kConfigError, "unknown query level: " + std::string(s));
}

const std::vector<DocLevel>& all_doc_levels() {
  static const std::vector<DocLevel> levels = [] {
    std::vector<DocLevel> out;
    for (const auto& [l, name] : kDocLevelNames) out.push_back(l);
    return out;
  }();
  return levels;
}

const std::vector<QueryLevel>& all_query_levels() {
  static const std::vector<QueryLevel> levels = [] {
    std::vector<QueryLevel> out;
    for (const auto& [l, name] : kQueryLevelNames) out.push_back(l);
    return out;
  }();
  return levels;
}

const Templates& Templates::defaults() {
  static const Templates t{strip_final_newline(detail::kDefaultSystem), detail::kDefaultUser,
                           detail::kDefaultColumnSelection, strip_final_newline(detail::kDefaultCot)};
  return t;
}

Templates Templates::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kConfigError, "template directory not found: " + dir.string());
  }
  Templates t = defaults();
  auto read = [&](const char* name, std::string& into, bool strip) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kConfigError, "cannot read template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    into = strip ? strip_final_newline(ss.str()) : ss.str();
  };
  read("system.txt", t.system, true);
  read("user.txt", t.user, false);
  read("column_selection.txt", t.column_selection, false);
  read("cot.txt", t.cot, true);
  return t;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      return out;
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error(ErrorCode::kConfigError, "unterminated placeholder in template");
    }
    const std::string name(text::trim(tmpl.substr(open + 2, close - open - 2)));
    const auto it = values.find(name);
    if (it == values.end()) {
      throw Error(ErrorCode::kConfigError, "template placeholder has no value: " + name);
    }
    out += it->second;
    pos = close + 2;
  }
}

std::string apply_query_disambiguation(const docs::QuerySpec& spec, QueryLevel level) {
  auto missing = [&](const char* what) {
    return Error(ErrorCode::kMissingDisambiguation,
                 "query " + spec.id + " has no " + what + " for level " + std::string(to_string(level)));
  };
  switch (level) {
    case QueryLevel::kOriginal:
      return spec.original_text;
    case QueryLevel::kOutputSchemaOnly:
      if (!spec.output_schema_clause) throw missing("output schema clause");
      return spec.original_text + " " + *spec.output_schema_clause;
    case QueryLevel::kFullyDisambiguated:
      if (!spec.term_disambiguated_text) throw missing("term-disambiguated text");
      if (!spec.output_schema_clause) throw missing("output schema clause");
      return *spec.term_disambiguated_text + " " + *spec.output_schema_clause;
  }
  throw missing("level");
}

bool needs_column_selection(DocLevel level) { return level >= DocLevel::kPlusNameDesc; }

std::string render_schema(const Schema& schema) {
  std::string out;
  for (const auto& t : schema.tables) {
    if (!out.empty()) out += "\n";
    std::vector<std::string> parts;
    for (const auto& c : t.columns) {
      std::string part = c.name;
      if (!c.declared_type.empty()) part += " " + c.declared_type;
      parts.push_back(std::move(part));
    }
    if (!t.primary_key.empty()) {
      parts.push_back("PRIMARY KEY (" + text::join(t.primary_key, ", ") + ")");
    }
    for (const auto& fk : t.foreign_keys) {
      parts.push_back("FOREIGN KEY (" + fk.local_column + ") REFERENCES " + fk.foreign_table +
                      " (" + fk.foreign_column + ")");
    }
    out += "CREATE TABLE " + t.name + " (\n  " + text::join(parts, ",\n  ") + "\n);";
  }
  return out;
}

std::vector<ColumnRef> parse_column_answer(std::string_view answer, const Schema& schema,
                                           std::size_t cap) {
  std::vector<ColumnRef> out;
  std::set<ColumnRef> seen;
  auto add = [&](ColumnRef ref) {
    if (seen.insert(ref).second) out.push_back(std::move(ref));
  };
  for (const auto& tok : scan_names(answer)) {
    if (tok.table) {
      const TableDef* t = schema.find_table(*tok.table);
      if (!t) continue;
      const auto idx = t->column_index(tok.column);
      if (idx) add({t->name, t->columns[*idx].name});
      continue;
    }
    for (const auto& t : schema.tables) {
      const auto idx = t.column_index(tok.column);
      if (idx) add({t.name, t.columns[*idx].name});
    }
  }
  if (out.empty()) return first_columns(schema, cap);
  if (out.size() > cap) out.resize(cap);
  return out;
}

llm::CompletionRequest column_selection_request(std::string_view query_text, const Schema& schema,
                                                const llm::CompletionRequest& base,
                                                const Templates& templates, std::size_t cap) {
  llm::CompletionRequest r = base;
  r.system_text = templates.system;
  r.user_text = render_template(templates.column_selection,
                                {{"schema", render_schema(schema)},
                                 {"question", std::string(query_text)},
                                 {"cap", std::to_string(cap)}});
  return r;
}

std::vector<ColumnRef> select_columns(std::string_view query_text, const Schema& schema,
                                      llm::CompletionClient& client,
                                      const llm::CompletionRequest& base, const Templates& templates,
                                      std::size_t cap) {
  if (schema.empty()) throw Error(ErrorCode::kConfigError, "column selection needs a schema");
  const auto request = column_selection_request(query_text, schema, base, templates, cap);
  return parse_column_answer(client.complete(request), schema, cap);
}

std::vector<RowSample> collect_samples(const Database& db, const Schema& schema, std::size_t n) {
  std::vector<RowSample> out;
  for (const auto& t : schema.tables) out.push_back(db.sample_rows(t.name, n));
  return out;
}

std::string render_samples(const std::vector<RowSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    if (!out.empty()) out += "\n";
    out += "First " + std::to_string(s.rows.size()) + " rows of " + s.table + ":\n";
    out += render_row(s.columns) + "\n";
    for (const auto& row : s.rows) {
      std::vector<std::string> cells;
      for (const auto& v : row) cells.push_back(to_text(v));
      out += render_row(cells) + "\n";
    }
  }
  return out;
}

std::string Prompt::user_text(const Templates& templates) const {
  std::string documentation;
  if (!doc_blocks.empty()) {
    documentation = "Documentation:\n";
    for (const auto& b : doc_blocks) documentation += "- " + b.text + "\n";
    documentation += "\n";
  }
  std::string samples;
  if (sample_block) samples = "Sample rows:\n" + *sample_block + "\n";
  return render_template(templates.user, {{"schema", schema_block},
                                          {"documentation", documentation},
                                          {"samples", samples},
                                          {"question", query_text},
                                          {"cot", cot_instruction}});
}

llm::CompletionRequest Prompt::request(const llm::CompletionRequest& base,
                                       const Templates& templates) const {
  llm::CompletionRequest r = base;
  r.system_text = system_text;
  r.user_text = user_text(templates);
  return r;
}

Prompt assemble_prompt(const Schema& schema, const docs::DocSet& docs, DocLevel doc_level,
                       QueryLevel query_level, const docs::QuerySpec& spec,
                       const std::vector<ColumnRef>& selected_columns,
                       const std::vector<RowSample>& samples, const PromptOptions& options,
                       const Templates& templates) {
  if (selected_columns.size() > kColumnCap) {
    throw Error(ErrorCode::kConfigError, "at most " + std::to_string(kColumnCap) +
                                             " columns can be selected, got " +
                                             std::to_string(selected_columns.size()));
  }
  Prompt p;
  p.system_text = templates.system;
  p.schema_block = render_schema(schema);
  p.query_text = apply_query_disambiguation(spec, query_level);
  p.cot_instruction = templates.cot;
  if (needs_column_selection(doc_level)) p.selected_columns = selected_columns;

  std::set<std::string> tables;
  for (const auto& t : schema.tables) tables.insert(t.name);
  const std::set<ColumnRef> chosen(p.selected_columns.begin(), p.selected_columns.end());
  const bool replace = options.replace_per_column_family;

  for (DocKind kind : {DocKind::kNameDescription, DocKind::kValueConsistency, DocKind::kCoverage,
                       DocKind::kGranularity}) {
    if (!shows(doc_level, kind)) continue;
    if (docs_for(docs, kind, tables, std::nullopt).empty()) {
      p.warnings.push_back("MissingDocs: no " + std::string(docs::to_string(kind)) +
                           " entries for " + docs.database);
      continue;
    }
    const auto entries = docs::is_column_scoped(kind)
                             ? docs_for(docs, kind, tables, chosen, &schema)
                             : docs_for(docs, kind, tables, std::nullopt, &schema);
    for (const auto& e : entries) p.doc_blocks.push_back({e.kind, e.scope, e.text});
  }

  if (shows_samples(doc_level, replace)) {
    if (samples.empty()) {
      p.warnings.push_back("MissingDocs: no sample rows for " + docs.database);
    } else {
      p.sample_block = render_samples(samples);
    }
  }
  return p;
}

bool satisfies_exclusivity(const Prompt& prompt) {
  if (prompt.selected_columns.size() > kColumnCap) return false;
  const std::set<ColumnRef> chosen(prompt.selected_columns.begin(), prompt.selected_columns.end());
  bool name_desc = false;
  bool value_consistency = false;
  for (const auto& b : prompt.doc_blocks) {
    if (!docs::is_column_scoped(b.kind)) continue;
    if (b.kind == DocKind::kNameDescription) name_desc = true;
    if (b.kind == DocKind::kValueConsistency) value_consistency = true;
    if (!b.scope.column) return false;
    const bool selected = std::any_of(chosen.begin(), chosen.end(), [&](const ColumnRef& c) {
      return text::iequals(c.table, b.scope.table) && text::iequals(c.column, *b.scope.column);
    });
    if (!selected) return false;
  }
  const int families = int(prompt.sample_block.has_value()) + int(name_desc) + int(value_consistency);
  return families <= 1;
}

}  // namespace ambidoc::prompt

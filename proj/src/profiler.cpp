#include "ambidoc/profiler.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "ambidoc/error.hpp"
#include "ambidoc/text.hpp"

namespace ambidoc::profile {

namespace {

constexpr std::array<std::string_view, 4> kAggregateHints = {"count", "total", "sum", "avg"};
constexpr std::size_t kMaxListedOutliers = 10;

bool is_letter(unsigned char c) { return std::isalpha(c) || c >= 0x80; }

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool plausible_year(std::string_view s) {
  if (s.size() != 4 || !all_digits(s)) return false;
  const int y = std::stoi(std::string(s));
  return y >= 1800 && y <= 2100;
}

bool two_digits_in(std::string_view s, int lo, int hi) {
  if (s.size() != 2 || !all_digits(s)) return false;
  const int v = (s[0] - '0') * 10 + (s[1] - '0');
  return v >= lo && v <= hi;
}

// YYYY-MM-DD, optionally followed by [T ]HH:MM[:SS[.fraction]].
bool iso_date(std::string_view s) {
  if (s.size() < 10) return false;
  if (!plausible_year(s.substr(0, 4)) || s[4] != '-' || s[7] != '-') return false;
  if (!two_digits_in(s.substr(5, 2), 1, 12) || !two_digits_in(s.substr(8, 2), 1, 31)) {
    return false;
  }
  if (s.size() == 10) return true;
  if (s[10] != 'T' && s[10] != ' ') return false;
  std::string_view t = s.substr(11);
  if (t.size() < 5 || !two_digits_in(t.substr(0, 2), 0, 23) || t[2] != ':' ||
      !two_digits_in(t.substr(3, 2), 0, 59)) {
    return false;
  }
  t.remove_prefix(5);
  if (t.empty()) return true;
  if (t.size() < 3 || t[0] != ':' || !two_digits_in(t.substr(1, 2), 0, 60)) return false;
  t.remove_prefix(3);
  if (t.empty()) return true;
  return t[0] == '.' && all_digits(t.substr(1));
}

// Distinguishes 1 from '1' the way SQL DISTINCT does.
std::string typed_key(const Value& v) {
  switch (v.index()) {
    case 0: return std::string(1, 'n');
    case 1: return 'i' + to_text(v);
    case 2: return 'r' + to_text(v);
    default: return 's' + std::get<std::string>(v);
  }
}

std::string row_key(const std::vector<Value>& row, std::initializer_list<std::size_t> cols) {
  std::string key;
  for (std::size_t c : cols) {
    const std::string part = typed_key(row[c]);
    key += std::to_string(part.size());
    key += ':';
    key += part;
  }
  return key;
}

std::vector<std::string> name_tokens(std::string_view name) {
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const auto c = static_cast<unsigned char>(name[i]);
    if (!std::isalnum(c)) {
      if (!cur.empty()) tokens.push_back(text::to_lower(cur));
      cur.clear();
      continue;
    }
    const bool boundary = std::isupper(c) && !cur.empty() &&
                          std::islower(static_cast<unsigned char>(cur.back()));
    if (boundary) {
      tokens.push_back(text::to_lower(cur));
      cur.clear();
    }
    cur += static_cast<char>(c);
  }
  if (!cur.empty()) tokens.push_back(text::to_lower(cur));
  return tokens;
}

std::string quote_list(const std::vector<std::string>& names) {
  return "(" + text::join(names, ", ") + ")";
}

}  // namespace

std::string token_pattern(std::string_view value) {
  std::string out;
  std::size_t i = 0;
  while (i < value.size()) {
    const auto c = static_cast<unsigned char>(value[i]);
    if (std::isdigit(c)) {
      while (i < value.size() && std::isdigit(static_cast<unsigned char>(value[i]))) ++i;
      out += "<num>";
    } else if (is_letter(c)) {
      while (i < value.size() && is_letter(static_cast<unsigned char>(value[i]))) ++i;
      out += "<word>";
    } else {
      out += value[i];
      ++i;
    }
  }
  return out;
}

FormatProfile infer_format(std::span<const Value> values) {
  FormatProfile profile;
  std::vector<std::string> patterns(values.size());
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t non_null = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_null(values[i])) {
      ++profile.null_count;
      continue;
    }
    ++non_null;
    patterns[i] = token_pattern(to_text(values[i]));
    if (counts[patterns[i]]++ == 0) order.push_back(patterns[i]);
  }
  if (non_null == 0) {
    profile.pattern = std::string(kEmptyPattern);
    return profile;
  }
  std::string best = order.front();
  for (const auto& p : order) {
    if (counts[p] > counts[best]) best = p;
  }
  if (counts[best] * 2 < non_null) {
    profile.pattern = std::string(kMixedPattern);
    profile.conforming_count = non_null;
    return profile;
  }
  profile.pattern = best;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_null(values[i])) continue;
    if (patterns[i] == best) {
      ++profile.conforming_count;
    } else {
      profile.outliers.push_back({to_text(values[i]), i});
    }
  }
  return profile;
}

std::vector<std::string> temporal_keys(std::string_view value) {
  const std::string_view v = text::trim(value);
  if (plausible_year(v)) return {std::string(v)};
  if (v.size() == 9 && v[4] == '/' && plausible_year(v.substr(0, 4)) &&
      plausible_year(v.substr(5, 4))) {
    return {std::string(v.substr(0, 4)), std::string(v.substr(5, 4))};
  }
  if (iso_date(v)) return {std::string(v)};
  return {};
}

CoverageProfile profile_coverage(const Database& db, std::string_view table) {
  const Schema schema = db.extract_schema();
  const TableDef* def = schema.find_table(table);
  if (def == nullptr) {
    throw Error(ErrorCode::kUnknownTable, "unknown table: " + std::string(table));
  }
  CoverageProfile profile;
  profile.table = def->name;
  const ResultSet rows = db.table_rows(def->name);
  profile.row_count = rows.rows.size();
  for (std::size_t c = 0; c < def->columns.size(); ++c) {
    const std::string& column = def->columns[c].name;
    bool temporal = true;
    std::size_t non_null = 0;
    std::string lo, hi;
    std::vector<std::string> domain;
    std::unordered_set<std::string> seen;
    bool categorical = true;
    for (const auto& row : rows.rows) {
      const Value& v = row[c];
      if (is_null(v)) continue;
      ++non_null;
      const std::string s = to_text(v);
      if (temporal) {
        auto keys = temporal_keys(s);
        if (keys.empty()) {
          temporal = false;
        } else {
          for (auto& k : keys) {
            if (lo.empty() || k < lo) lo = k;
            if (hi.empty() || k > hi) hi = k;
          }
        }
      }
      if (categorical && seen.insert(s).second) {
        domain.push_back(s);
        if (domain.size() > kCategoricalThreshold) categorical = false;
      }
    }
    if (non_null == 0) continue;
    if (temporal) profile.temporal_spans[column] = {lo, hi};
    if (categorical) profile.categorical_domains[column] = std::move(domain);
  }
  return profile;
}

std::string_view to_string(GranularityVerdict v) {
  switch (v) {
    case GranularityVerdict::kLikelyRawEvents: return "LikelyRawEvents";
    case GranularityVerdict::kLikelyAggregated: return "LikelyAggregated";
    case GranularityVerdict::kUnknown: return "Unknown";
  }
  return "Unknown";
}

std::span<const std::string_view> aggregate_hint_tokens() { return kAggregateHints; }

bool has_aggregate_hint(std::string_view column_name) {
  for (const auto& tok : name_tokens(column_name)) {
    if (std::find(kAggregateHints.begin(), kAggregateHints.end(), tok) != kAggregateHints.end()) {
      return true;
    }
  }
  return false;
}

GranularityProfile profile_granularity(std::string_view table,
                                       const std::vector<std::string>& columns,
                                       const std::vector<std::vector<Value>>& rows) {
  GranularityProfile profile;
  profile.table = std::string(table);
  profile.row_count = rows.size();
  for (const auto& c : columns) {
    if (has_aggregate_hint(c)) profile.aggregate_hint_columns.push_back(c);
  }
  if (rows.empty()) {
    profile.verdict = GranularityVerdict::kUnknown;
    return profile;
  }

  std::unordered_set<std::string> distinct_rows;
  for (const auto& row : rows) {
    std::string key;
    for (std::size_t c = 0; c < row.size(); ++c) key += row_key(row, {c});
    distinct_rows.insert(std::move(key));
  }
  profile.duplicate_row_ratio =
      static_cast<double>(rows.size() - distinct_rows.size()) / static_cast<double>(rows.size());

  auto unique_on = [&](std::initializer_list<std::size_t> cols) {
    std::unordered_set<std::string> seen;
    for (const auto& row : rows) {
      if (!seen.insert(row_key(row, cols)).second) return false;
    }
    return true;
  };
  std::vector<bool> single_key(columns.size(), false);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (unique_on({i})) {
      single_key[i] = true;
      profile.candidate_keys.push_back({columns[i]});
    }
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    for (std::size_t j = i + 1; j < columns.size(); ++j) {
      if (single_key[i] || single_key[j]) continue;
      if (unique_on({i, j})) profile.candidate_keys.push_back({columns[i], columns[j]});
    }
  }

  const bool hinted = !profile.aggregate_hint_columns.empty();
  if (hinted && !profile.candidate_keys.empty()) {
    profile.verdict = GranularityVerdict::kLikelyAggregated;
  } else if (!hinted && distinct_rows.size() == rows.size()) {
    profile.verdict = GranularityVerdict::kLikelyRawEvents;
  } else {
    profile.verdict = GranularityVerdict::kUnknown;
  }
  return profile;
}

GranularityProfile profile_granularity(const Database& db, std::string_view table) {
  const Schema schema = db.extract_schema();
  const TableDef* def = schema.find_table(table);
  if (def == nullptr) {
    throw Error(ErrorCode::kUnknownTable, "unknown table: " + std::string(table));
  }
  std::vector<std::string> columns;
  for (const auto& c : def->columns) columns.push_back(c.name);
  return profile_granularity(def->name, columns, db.table_rows(def->name).rows);
}

DatabaseProfile profile_database(const Database& db) {
  DatabaseProfile out;
  const Schema schema = db.extract_schema();
  for (const auto& table : schema.tables) {
    for (const auto& column : table.columns) {
      const auto values = db.column_values(table.name, column.name);
      FormatProfile f = infer_format(values);
      f.table = table.name;
      f.column = column.name;
      out.formats.push_back(std::move(f));
    }
    out.coverage.push_back(profile_coverage(db, table.name));
    out.granularity.push_back(profile_granularity(db, table.name));
  }
  return out;
}

namespace {

std::string value_consistency_text(const FormatProfile& f) {
  if (f.pattern == kEmptyPattern) {
    return "Column " + f.column + " has no non-null values to describe.";
  }
  if (f.pattern == kMixedPattern) {
    return "Values in " + f.column + " follow no single dominant format.";
  }
  std::string outliers;
  if (f.outliers.empty()) {
    outliers = "none";
  } else {
    std::vector<std::string> listed;
    for (std::size_t i = 0; i < f.outliers.size() && i < kMaxListedOutliers; ++i) {
      listed.push_back("'" + f.outliers[i].value + "'");
    }
    outliers = text::join(listed, ", ");
    if (f.outliers.size() > kMaxListedOutliers) {
      outliers += " and " + std::to_string(f.outliers.size() - kMaxListedOutliers) + " more";
    }
  }
  return "Values in " + f.column + " consistently follow '" + f.pattern +
         "'. Outliers: " + outliers + ".";
}

std::string coverage_text(const TableDef& table, const CoverageProfile& c) {
  std::vector<std::string> spans;
  for (const auto& col : table.columns) {
    auto it = c.temporal_spans.find(col.name);
    if (it == c.temporal_spans.end()) continue;
    spans.push_back(col.name + " from " + it->second.min + " to " + it->second.max);
  }
  const std::string name = "'" + table.name + "'";
  if (spans.empty()) {
    return name + " contains " + std::to_string(c.row_count) +
           " rows; no time span was detected.";
  }
  return name + " covers rows with " + text::join(spans, ", and ") + ".";
}

std::string granularity_text(const GranularityProfile& g) {
  const std::string name = "'" + g.table + "'";
  switch (g.verdict) {
    case GranularityVerdict::kLikelyRawEvents: {
      std::string s = "Each row in " + name + " is a distinct record";
      if (!g.candidate_keys.empty()) {
        s += ", uniquely identified by " + quote_list(g.candidate_keys.front());
      }
      return s + ". It is not aggregated.";
    }
    case GranularityVerdict::kLikelyAggregated:
      return "Each row in " + name + " appears to aggregate " +
             quote_list(g.aggregate_hint_columns) + " per group of " +
             quote_list(g.candidate_keys.front()) + ".";
    case GranularityVerdict::kUnknown:
      break;
  }
  if (g.row_count == 0) return "Each row in " + name + " has unknown granularity; the table is empty.";
  const auto dupes = static_cast<long long>(
      g.duplicate_row_ratio * static_cast<double>(g.row_count) + 0.5);
  return "Each row in " + name + " has unclear granularity; " +
         text::percent_one_decimal(dupes, static_cast<long long>(g.row_count)) +
         "% of rows are exact duplicates.";
}

}  // namespace

std::vector<docs::DocEntry> draft_documentation(
    const Schema& schema, const std::vector<FormatProfile>& formats,
    const std::vector<CoverageProfile>& coverage,
    const std::vector<GranularityProfile>& granularity) {
  using docs::DocEntry;
  using docs::DocKind;
  std::vector<DocEntry> out;
  for (const auto& table : schema.tables) {
    for (const auto& column : table.columns) {
      for (const auto& f : formats) {
        if (!text::iequals(f.table, table.name) || !text::iequals(f.column, column.name)) continue;
        docs::Scope scope{table.name, column.name};
        out.push_back({docs::draft_id(DocKind::kValueConsistency, scope),
                       DocKind::kValueConsistency, scope, value_consistency_text(f),
                       docs::Provenance::kDraft});
      }
    }
  }
  for (const auto& table : schema.tables) {
    for (const auto& c : coverage) {
      if (!text::iequals(c.table, table.name)) continue;
      docs::Scope scope{table.name, std::nullopt};
      out.push_back({docs::draft_id(DocKind::kCoverage, scope), DocKind::kCoverage, scope,
                     coverage_text(table, c), docs::Provenance::kDraft});
    }
  }
  for (const auto& table : schema.tables) {
    for (const auto& g : granularity) {
      if (!text::iequals(g.table, table.name)) continue;
      docs::Scope scope{table.name, std::nullopt};
      out.push_back({docs::draft_id(DocKind::kGranularity, scope), DocKind::kGranularity, scope,
                     granularity_text(g), docs::Provenance::kDraft});
    }
  }
  return out;
}

}  // namespace ambidoc::profile

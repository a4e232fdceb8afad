#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ambidoc/dataset.hpp"
#include "ambidoc/docstore.hpp"

namespace ambidoc::profile {

inline constexpr std::string_view kEmptyPattern = "<empty>";
inline constexpr std::string_view kMixedPattern = "<mixed>";
inline constexpr std::size_t kCategoricalThreshold = 20;

struct Outlier {
  std::string value;
  std::size_t row_index = 0;

  friend bool operator==(const Outlier&, const Outlier&) = default;
};

struct FormatProfile {
  std::string table;
  std::string column;
  std::string pattern;
  std::size_t conforming_count = 0;
  std::vector<Outlier> outliers;
  std::size_t null_count = 0;
};

// Generalizes one value: digit runs become <num>, letter runs <word>, and
// every other byte stays literal. Bytes >= 0x80 count as letters.
std::string token_pattern(std::string_view value);

// Majority pattern over the non-null values. The pattern must cover at least
// half of them, otherwise the result is <mixed> with no outliers. Row indices
// count nulls.
FormatProfile infer_format(std::span<const Value> values);

struct TemporalSpan {
  std::string min;
  std::string max;

  friend bool operator==(const TemporalSpan&, const TemporalSpan&) = default;
};

struct CoverageProfile {
  std::string table;
  std::size_t row_count = 0;
  std::map<std::string, TemporalSpan> temporal_spans;
  std::map<std::string, std::vector<std::string>> categorical_domains;
};

// Sort keys for a temporal value: a 4-digit year in [1800, 2100] gives
// {"YYYY"}, a "YYYY/YYYY" season both years, an ISO date or datetime the
// date text itself. Empty when the value is not temporal.
std::vector<std::string> temporal_keys(std::string_view value);

CoverageProfile profile_coverage(const Database& db, std::string_view table);

enum class GranularityVerdict { kLikelyRawEvents, kLikelyAggregated, kUnknown };
std::string_view to_string(GranularityVerdict v);

struct GranularityProfile {
  std::string table;
  std::size_t row_count = 0;
  double duplicate_row_ratio = 0.0;
  // Minimal keys only: a pair is listed only when neither member is a key.
  std::vector<std::vector<std::string>> candidate_keys;
  std::vector<std::string> aggregate_hint_columns;
  GranularityVerdict verdict = GranularityVerdict::kUnknown;
};

// Name tokens that suggest pre-aggregated rows.
std::span<const std::string_view> aggregate_hint_tokens();

// True when a name token (split on non-alphanumerics and camelCase) is an
// aggregate hint.
bool has_aggregate_hint(std::string_view column_name);

// Row-level analysis over an in-memory table; the database overload reads
// the table and delegates here.
GranularityProfile profile_granularity(std::string_view table,
                                       const std::vector<std::string>& columns,
                                       const std::vector<std::vector<Value>>& rows);
GranularityProfile profile_granularity(const Database& db, std::string_view table);

struct DatabaseProfile {
  std::vector<FormatProfile> formats;
  std::vector<CoverageProfile> coverage;
  std::vector<GranularityProfile> granularity;
};

// Every column of every table.
DatabaseProfile profile_database(const Database& db);

// Draft documentation, all with draft provenance: one value-consistency entry
// per format profile, one coverage and one granularity entry per table.
std::vector<docs::DocEntry> draft_documentation(
    const Schema& schema, const std::vector<FormatProfile>& formats,
    const std::vector<CoverageProfile>& coverage,
    const std::vector<GranularityProfile>& granularity);

}  // namespace ambidoc::profile

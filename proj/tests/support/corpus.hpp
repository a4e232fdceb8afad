#pragma once

// Random query generator over the soccer fixture (betfront, football_data).
// A GenQuery is rendered under a Style; two renderings of one GenQuery differ
// only in syntax and in the order of commutative parts.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ambidoc/dataset.hpp"

namespace ambidoc::testing::corpus {

struct Col {
  std::string table;
  std::string column;
};

struct Item {
  std::string agg;  // "", "count", "count_distinct", "min", "max", "sum", "count_star"
  Col col;
  std::string divisor;  // rendered as "<item> / <divisor>" when set
};

struct Atom {
  Col col;
  std::string op;       // = != < <= > >= like "is null" "is not null"
  std::string literal;  // SQL literal text; empty for null checks
};

struct GenQuery {
  std::string table = "betfront";  // when not a join
  bool join = false;                // betfront joined with football_data on country
  bool distinct = false;
  std::vector<Item> select;
  std::vector<Atom> where;
  std::vector<Col> group_by;
  std::optional<Col> order_by;
  bool descending = false;
  std::optional<int> limit;
};

struct Style {
  bool upper_keywords = true;
  bool aliases = false;
  bool explicit_join = true;
  bool swap_tables = false;
  bool qualify = false;  // single-table queries only; joins always qualify
  bool flip_join_condition = false;
  std::vector<std::size_t> select_order;
  std::vector<std::size_t> where_order;
  std::vector<std::size_t> group_order;
  std::vector<bool> flips;  // per where atom: literal on the left
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  GenQuery query();
  // Identity order, no flips, uppercase keywords.
  Style plain_style(const GenQuery& q);
  // Random surface syntax and random commutative reordering.
  Style random_style(const GenQuery& q);
  // Same surface syntax as base, with commutative parts reordered.
  Style reordered(const GenQuery& q, Style base);
  // A semantic change: extra column, dropped or altered condition, toggled
  // DISTINCT, different aggregate.
  GenQuery mutate(const GenQuery& q);

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool coin(int percent) { return static_cast<int>(rng_() % 100) < percent; }
  std::vector<std::size_t> permutation(std::size_t n);
  Atom atom(bool join);
  Item aggregate(bool join);

  std::mt19937_64 rng_;
};

std::string render(const GenQuery& q, const Style& style);

// Exact match must imply execution match. Each pair is either two renderings
// of one query or a query against a mutation of it.
struct SoundnessResult {
  std::size_t pairs = 0;
  std::size_t exact = 0;
  std::size_t violations = 0;
  std::size_t execution_errors = 0;
  std::vector<std::string> examples;  // first few problems
};
SoundnessResult check_soundness(const Database& db, std::size_t pairs, std::uint64_t seed);

// Canonicalizing a rendered canonical form gives it back, and a commutative
// reordering canonicalizes to the same query.
struct CanonicalizationResult {
  std::size_t queries = 0;
  std::size_t idempotent = 0;
  std::size_t reorder_invariant = 0;
  std::vector<std::string> examples;
};
CanonicalizationResult check_canonicalization(std::size_t queries, std::uint64_t seed,
                                              const Schema* schema = nullptr);

}  // namespace ambidoc::testing::corpus

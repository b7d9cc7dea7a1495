#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cohort/catalog.hpp"

namespace cohort {

enum class Comparator { kLessEqual, kLess, kGreaterEqual, kGreater };

/// Wire spelling: "<=", "<", ">=", ">".
std::string_view to_string(Comparator op);
bool parse_comparator(std::string_view text, Comparator& out);
bool compare(double lhs, Comparator op, double rhs);

/// `{"op":"in","content":{"field":..,"value":[..]}}`
struct CategoricalLeaf {
  std::string field;
  std::vector<std::string> values;

  friend bool operator==(const CategoricalLeaf&, const CategoricalLeaf&) = default;
};

/// `{"op":"<=","content":{"field":..,"value":<number>}}`
struct NumericLeaf {
  std::string field;
  Comparator op = Comparator::kGreaterEqual;
  double value = 0.0;

  friend bool operator==(const NumericLeaf&, const NumericLeaf&) = default;
};

using Leaf = std::variant<CategoricalLeaf, NumericLeaf>;

const std::string& leaf_field(const Leaf& leaf);

/// A cohort filter: a flat "and" over leaves. An empty conjunction is the null
/// filter and matches every case.
struct Filter {
  std::vector<Leaf> leaves;

  bool empty() const noexcept { return leaves.empty(); }
  friend bool operator==(const Filter&, const Filter&) = default;
};

enum class Severity { kError, kWarning };

struct Issue {
  Severity severity = Severity::kError;
  std::string path;
  std::string message;
};

struct ValidationReport {
  bool valid = true;
  std::vector<Issue> issues;

  std::vector<const Issue*> errors() const;
};

struct ParsedFilter {
  Filter filter;
  std::vector<Issue> warnings;  // e.g. leaf values that had to be lowercased
};

/// Parses the wire format. Checks structure only; field and value legality is
/// left to validate(). Never crashes on arbitrary bytes: failures surface as
/// SyntaxError (not JSON) or StructureError (wrong shape, with JSON pointer).
ParsedFilter parse_filter(std::string_view text);

ValidationReport validate(const Filter& filter, const FieldCatalog& catalog);

/// Leaves sorted by field, categorical values sorted, fixed key order, no
/// whitespace.
std::string serialize_canonical(const Filter& filter);

/// Same ordering as serialize_canonical, applied to the AST.
Filter canonicalize(Filter filter);

/// True iff the filter is the null filter (zero leaves).
bool lint_null(const Filter& filter);

/// Canonical spelling of a JSON number as used on the wire.
std::string format_number(double value);

/// JSON string literal (quoted and escaped) exactly as the canonical serializer
/// writes it.
std::string quote_json_string(std::string_view s);

}  // namespace cohort

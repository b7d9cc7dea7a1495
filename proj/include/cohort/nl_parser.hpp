#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cohort/catalog.hpp"
#include "cohort/filter.hpp"

namespace cohort {

/// A normalized word: lowercase run of letters/digits (a '.' between digits is
/// kept, so "12.5" and "beataml1.0" stay whole). `clause` counts the ';'
/// separators before the token; matches never span two clauses.
struct Token {
  std::string text;
  std::size_t start = 0;  // byte offsets into the original text
  std::size_t end = 0;
  std::size_t clause = 0;
};

std::vector<Token> tokenize(std::string_view text);

/// Surface strings the parser recognises, all derived from the catalog.
class Lexicon {
 public:
  enum class EntryKind { kValue, kField, kComparator };

  struct Entry {
    EntryKind kind = EntryKind::kValue;
    std::vector<std::string> tokens;
    std::size_t field = 0;  // catalog index (kValue, kField)
    std::string value;      // canonical value (kValue)
    Comparator op{};        // kComparator
  };

  explicit Lexicon(const FieldCatalog& catalog);

  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Entries whose first token is `token`, longest first, then catalog order.
  const std::vector<std::size_t>& starting_with(const std::string& token) const;

  /// normalized surface -> every (field name, canonical value) it can mean
  const std::map<std::string, std::vector<std::pair<std::string, std::string>>>& value_entries() const noexcept {
    return value_entries_;
  }
  /// normalized display phrase -> field name
  const std::map<std::string, std::string>& field_entries() const noexcept { return field_entries_; }
  /// normalized comparator phrase -> operator
  const std::map<std::string, Comparator>& numeric_patterns() const noexcept { return numeric_patterns_; }

 private:
  void add(Entry entry);

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> value_entries_;
  std::map<std::string, std::string> field_entries_;
  std::map<std::string, Comparator> numeric_patterns_;
};

Lexicon build_lexicon(const FieldCatalog& catalog);

enum class Confidence { kExact, kPartial };

std::string_view to_string(Confidence c);

struct MatchedSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string field;
  std::string value;  // canonical value, or the number as written on the wire
};

struct TextSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

struct ParseDiagnostics {
  std::vector<MatchedSpan> matched_spans;
  std::vector<TextSpan> unmatched_text;
  Confidence confidence = Confidence::kPartial;
};

struct QueryParse {
  Filter filter;
  ParseDiagnostics diagnostics;
};

/// Greedy longest-match translation of a cohort description into a filter.
/// The result always validates against `catalog`; nothing is thrown for weak
/// input, which shows up as unmatched text and partial confidence instead.
QueryParse parse_query(std::string_view text, const Lexicon& lexicon, const FieldCatalog& catalog);

}  // namespace cohort

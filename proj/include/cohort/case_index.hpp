#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cohort/catalog.hpp"
#include "cohort/filter.hpp"

namespace cohort {

/// Sorted, duplicate-free list of case identifiers.
using CaseSet = std::vector<std::string>;

using AttributeValue = std::variant<std::vector<std::string>, double>;

struct CaseRecord {
  std::string case_id;
  std::map<std::string, AttributeValue> attributes;
};

/// Immutable store of case records with per-(field, value) posting lists and
/// per-field sorted numeric columns. Internal document ids follow case-id
/// order, so every posting list is already sorted by case id.
class CaseIndex {
 public:
  CaseIndex(FieldCatalog catalog, std::vector<CaseRecord> records);

  const FieldCatalog& catalog() const noexcept { return catalog_; }
  const std::vector<CaseRecord>& records() const noexcept { return records_; }  // sorted by case_id
  std::size_t size() const noexcept { return records_.size(); }

  /// Posting list for (field, value); empty when nothing matches.
  const std::vector<std::uint32_t>& postings(std::string_view field, std::string_view value) const;

  /// Document ids matching the filter (sorted). The filter must validate.
  std::vector<std::uint32_t> match(const Filter& filter) const;

  CaseSet ids(const std::vector<std::uint32_t>& docs) const;
  CaseSet all_ids() const;

 private:
  // Sets the bit of every document the leaf selects.
  void mark_leaf(const Leaf& leaf, std::vector<std::uint64_t>& bits) const;

  FieldCatalog catalog_;
  std::vector<CaseRecord> records_;
  // [field][value] -> docs; empty for numeric fields
  std::vector<std::vector<std::vector<std::uint32_t>>> inverted_;
  // [field] -> (value, doc) sorted; empty for categorical fields
  std::vector<std::vector<std::pair<double, std::uint32_t>>> numeric_;
};

/// Reads the JSONL case file. Throws DataError naming the line for malformed
/// input, or listing every attribute field the catalog does not define.
CaseIndex load_cases(std::istream& in, const FieldCatalog& catalog);
CaseIndex load_cases_file(const std::filesystem::path& path, const FieldCatalog& catalog);

/// Case ids selected by `filter`: "and" intersects leaves, "in" is a union of
/// postings (any value of a multi-valued attribute counts), comparisons test
/// the record's number, a missing attribute never matches, and the null filter
/// selects everything. Throws ValidationError for an invalid filter.
CaseSet execute(const Filter& filter, const CaseIndex& index);

/// Export payload: ids sorted, one per line, each newline-terminated.
std::string format_export(const CaseSet& ids);
void export_cases(const CaseSet& ids, const std::filesystem::path& path);
CaseSet read_export(const std::filesystem::path& path);

/// Seeded synthetic case records covering every catalog field. Each attribute
/// is absent with probability `missing_rate`; categorical attributes carry 1-3
/// values.
std::vector<CaseRecord> generate_cases(const FieldCatalog& catalog, std::size_t count, std::uint64_t seed,
                                       double missing_rate = 0.05);

std::string case_to_jsonl(const CaseRecord& record);
void write_cases(std::ostream& out, const std::vector<CaseRecord>& records);

}  // namespace cohort

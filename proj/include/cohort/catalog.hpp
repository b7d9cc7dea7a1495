#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cohort {

enum class FieldKind { kCategorical, kNumeric };

std::string_view to_string(FieldKind kind);

struct NumericRange {
  double min = 0.0;
  double max = 0.0;
  std::string unit;
};

/// One filterable property of the core set.
struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::kCategorical;
  std::vector<std::string> values;  // categorical only, manifest order
  std::optional<NumericRange> range;  // numeric only
  std::string group;
  // Phrase used when rendering or recognising the field in prose. Derived from
  // the dotted name unless the manifest sets "display".
  std::string display;
  // Extra surface strings that mean a canonical value ("rna sequencing" for
  // "rna-seq"). Keys are canonical values.
  std::map<std::string, std::vector<std::string>> aliases;

  bool is_categorical() const noexcept { return kind == FieldKind::kCategorical; }
  bool is_numeric() const noexcept { return kind == FieldKind::kNumeric; }
  bool has_value(std::string_view value) const;
  /// Index of `value` in `values`, or npos.
  std::size_t value_index(std::string_view value) const;
};

/// The core set: an ordered, duplicate-free list of field specs. Immutable once
/// loaded.
class FieldCatalog {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  FieldCatalog() = default;
  FieldCatalog(std::string version, std::vector<FieldSpec> fields);

  const std::string& version() const noexcept { return version_; }
  const std::vector<FieldSpec>& fields() const noexcept { return fields_; }
  std::size_t size() const noexcept { return fields_.size(); }
  bool empty() const noexcept { return fields_.empty(); }

  const FieldSpec* find(std::string_view name) const;
  /// Manifest position of `name`, or npos.
  std::size_t index_of(std::string_view name) const;

  /// Manifest JSON text (the `/api/fields` payload).
  std::string to_manifest() const;

 private:
  std::string version_;
  std::vector<FieldSpec> fields_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

/// Parses and checks a catalog manifest. Throws SyntaxError, StructureError
/// (with a JSON-pointer path) or DataError.
FieldCatalog load_catalog(std::string_view manifest_text);
FieldCatalog load_catalog_file(const std::filesystem::path& path);

/// "cases.project.program.name" -> "program name",
/// "cases.diagnoses.age_at_diagnosis" -> "age at diagnosis".
std::string default_display_phrase(std::string_view field_name);

}  // namespace cohort

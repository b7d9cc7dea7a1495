#include "cohort/verbalizer.hpp"

#include <array>
#include <vector>

#include "cohort/error.hpp"
#include "cohort/rng.hpp"

namespace cohort {

namespace {

void require_valid(const Filter& filter, const FieldCatalog& catalog) {
  auto report = validate(filter, catalog);
  if (!report.valid) {
    const auto* first = report.errors().front();
    throw ValidationError(first->message, first->path);
  }
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string number_with_unit(double value, const FieldSpec& spec) {
  std::string out = format_number(value);
  if (spec.range && !spec.range->unit.empty()) out += " " + spec.range->unit;
  return out;
}

// "a", "a or b", "a, b or c"
std::string or_list(const std::vector<std::string>& values) {
  if (values.size() == 1) return values.front();
  std::string out;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (i) out += ", ";
    out += values[i];
  }
  return out + " or " + values.back();
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string_view comparator_phrase(Comparator op) {
  switch (op) {
    case Comparator::kGreaterEqual:
      return "at least";
    case Comparator::kLessEqual:
      return "at most";
    case Comparator::kGreater:
      return "more than";
    case Comparator::kLess:
      return "less than";
  }
  return "";
}

std::string verbalize_canonical(const Filter& filter, const FieldCatalog& catalog) {
  require_valid(filter, catalog);
  if (filter.empty()) return "all cases";

  std::vector<std::string> clauses;
  for (const auto& leaf : canonicalize(filter).leaves) {
    const FieldSpec& spec = *catalog.find(leaf_field(leaf));
    if (const auto* cat = std::get_if<CategoricalLeaf>(&leaf)) {
      clauses.push_back(spec.display + " is any of: " + join(cat->values, ", "));
    } else {
      const auto& num = std::get<NumericLeaf>(leaf);
      clauses.push_back(spec.display + " is " + std::string(comparator_phrase(num.op)) + " " +
                        number_with_unit(num.value, spec));
    }
  }
  return "cases where " + join(clauses, "; ");
}

std::string verbalize_fluent(const Filter& filter, const FieldCatalog& catalog, std::uint64_t seed) {
  require_valid(filter, catalog);
  if (filter.empty()) return "all cases in the GDC";

  Rng rng(seed);
  std::vector<std::string> descriptors;  // placed before the subject noun
  std::vector<std::string> qualifiers;   // "with ..." clauses
  std::vector<std::string> membership;   // "that belong to ..." clauses

  for (const auto& leaf : canonicalize(filter).leaves) {
    const FieldSpec& spec = *catalog.find(leaf_field(leaf));
    if (const auto* cat = std::get_if<CategoricalLeaf>(&leaf)) {
      const std::string values = or_list(cat->values);
      const bool plural = cat->values.size() > 1;
      if (ends_with(spec.name, ".project_id")) {
        membership.push_back("that belong to the " + values + (plural ? " projects" : " project"));
        continue;
      }
      if (ends_with(spec.name, ".program.name")) {
        membership.push_back("from the " + values + (plural ? " programs" : " program"));
        continue;
      }
      switch (rng.below(4)) {
        case 0:
          descriptors.push_back(values);
          break;
        case 1:
          qualifiers.push_back(spec.display + " " + values);
          break;
        case 2:
          qualifiers.push_back("a " + spec.display + " of " + values);
          break;
        default:
          qualifiers.push_back(values + " " + spec.display);
          break;
      }
    } else {
      const auto& num = std::get<NumericLeaf>(leaf);
      static constexpr std::array<std::array<std::string_view, 2>, 4> kPhrases = {{
          {"at most", "no more than"},
          {"less than", "under"},
          {"at least", "no less than"},
          {"more than", "over"},
      }};
      const auto phrase = kPhrases[static_cast<std::size_t>(num.op)][rng.below(2)];
      qualifiers.push_back(spec.display + " " + std::string(phrase) + " " + number_with_unit(num.value, spec));
    }
  }

  static constexpr std::array<std::string_view, 3> kSubjects = {"cases", "patients", "samples"};
  std::string sentence;
  if (!descriptors.empty()) sentence += join(descriptors, " ") + " ";
  sentence += kSubjects[rng.below(kSubjects.size())];
  if (!qualifiers.empty()) sentence += " with " + join(qualifiers, " and ");
  for (const auto& m : membership) sentence += " " + m;
  return sentence;
}

}  // namespace cohort

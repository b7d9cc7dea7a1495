#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "cohort/catalog.hpp"
#include "cohort/filter.hpp"

namespace cohort {

/// Phrase the canonical verbalizer uses for each comparator ("at least" for >=).
std::string_view comparator_phrase(Comparator op);

/// Loss-free rendering, e.g.
///   cases where age at diagnosis is at least 18250 days; program name is any of: target
/// The null filter renders as "all cases". Throws ValidationError when the
/// filter does not validate against `catalog`.
std::string verbalize_canonical(const Filter& filter, const FieldCatalog& catalog);

/// Seeded, more natural phrasing drawn from a small template bank. Not
/// guaranteed to parse back; every value still appears verbatim.
std::string verbalize_fluent(const Filter& filter, const FieldCatalog& catalog, std::uint64_t seed);

}  // namespace cohort

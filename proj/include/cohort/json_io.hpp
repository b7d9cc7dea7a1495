#pragma once

#include <json.hpp>

#include "cohort/filter.hpp"

namespace cohort {

/// Structural parse of a filter that arrived as a decoded JSON value (API
/// bodies embed filters as objects). `path` prefixes issue locations.
ParsedFilter parse_filter_json(const nlohmann::json& value, const std::string& path = "");

/// Filter as a JSON value, canonical ordering.
nlohmann::ordered_json filter_to_json(const Filter& filter);

nlohmann::ordered_json report_to_json(const ValidationReport& report);

}  // namespace cohort

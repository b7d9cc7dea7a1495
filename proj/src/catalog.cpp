#include "cohort/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cohort/error.hpp"

namespace cohort {

using json = nlohmann::json;

std::string_view to_string(FieldKind kind) {
  return kind == FieldKind::kCategorical ? "categorical" : "numeric";
}

bool FieldSpec::has_value(std::string_view value) const {
  return value_index(value) != FieldCatalog::npos;
}

std::size_t FieldSpec::value_index(std::string_view value) const {
  auto it = std::find(values.begin(), values.end(), value);
  return it == values.end() ? FieldCatalog::npos : static_cast<std::size_t>(it - values.begin());
}

FieldCatalog::FieldCatalog(std::string version, std::vector<FieldSpec> fields)
    : version_(std::move(version)), fields_(std::move(fields)) {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (!by_name_.emplace(fields_[i].name, i).second) {
      throw DataError("duplicate field '" + fields_[i].name + "'", "/fields/" + std::to_string(i) + "/name");
    }
  }
}

const FieldSpec* FieldCatalog::find(std::string_view name) const {
  auto i = index_of(name);
  return i == npos ? nullptr : &fields_[i];
}

std::size_t FieldCatalog::index_of(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? npos : it->second;
}

std::string FieldCatalog::to_manifest() const {
  json fields = json::array();
  for (const auto& f : fields_) {
    json entry;
    entry["name"] = f.name;
    entry["kind"] = std::string(to_string(f.kind));
    entry["values"] = f.is_categorical() ? json(f.values) : json(nullptr);
    if (f.range) {
      entry["range"] = {{"min", f.range->min}, {"max", f.range->max}, {"unit", f.range->unit}};
    } else {
      entry["range"] = nullptr;
    }
    entry["group"] = f.group;
    entry["display"] = f.display;
    if (!f.aliases.empty()) entry["aliases"] = f.aliases;
    fields.push_back(std::move(entry));
  }
  json doc;
  doc["version"] = version_;
  doc["fields"] = std::move(fields);
  return doc.dump();
}

std::string default_display_phrase(std::string_view field_name) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= field_name.size()) {
    auto dot = field_name.find('.', start);
    if (dot == std::string_view::npos) dot = field_name.size();
    parts.emplace_back(field_name.substr(start, dot - start));
    start = dot + 1;
  }
  std::string phrase = parts.back();
  if ((phrase == "name" || phrase == "id") && parts.size() >= 2) {
    phrase = parts[parts.size() - 2] + " " + phrase;
  }
  std::replace(phrase.begin(), phrase.end(), '_', ' ');
  return phrase;
}

namespace {

bool is_lowercase(std::string_view s) {
  return std::none_of(s.begin(), s.end(), [](unsigned char c) { return std::isupper(c) != 0; });
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw StructureError(std::string("missing key '") + key + "'", path);
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) throw StructureError(std::string("'") + key + "' must be a string", path + "/" + key);
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number()) throw StructureError(std::string("'") + key + "' must be a number", path + "/" + key);
  return v.get<double>();
}

FieldSpec parse_field(const json& entry, const std::string& path) {
  if (!entry.is_object()) throw StructureError("field entry must be an object", path);
  FieldSpec spec;
  spec.name = require_string(entry, "name", path);
  if (spec.name.empty()) throw DataError("field name must be non-empty", path + "/name");

  auto kind = require_string(entry, "kind", path);
  if (kind == "categorical") {
    spec.kind = FieldKind::kCategorical;
  } else if (kind == "numeric") {
    spec.kind = FieldKind::kNumeric;
  } else {
    throw StructureError("kind must be 'categorical' or 'numeric'", path + "/kind");
  }

  spec.group = entry.contains("group") && entry["group"].is_string() ? entry["group"].get<std::string>() : "";
  if (auto it = entry.find("display"); it != entry.end() && it->is_string() && !it->get<std::string>().empty()) {
    spec.display = it->get<std::string>();
  } else {
    spec.display = default_display_phrase(spec.name);
  }

  const auto& values = require(entry, "values", path);
  const auto& range = require(entry, "range", path);

  if (spec.is_categorical()) {
    if (!values.is_array()) throw StructureError("categorical field needs a values list", path + "/values");
    if (values.empty()) throw DataError("categorical field needs at least one value", path + "/values");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto vpath = path + "/values/" + std::to_string(i);
      if (!values[i].is_string()) throw StructureError("value must be a string", vpath);
      auto v = values[i].get<std::string>();
      if (v.empty()) throw DataError("value must be non-empty", vpath);
      if (!is_lowercase(v)) throw DataError("value '" + v + "' must be lowercase", vpath);
      if (!seen.insert(v).second) throw DataError("duplicate value '" + v + "'", vpath);
      spec.values.push_back(std::move(v));
    }
    if (!range.is_null()) throw StructureError("categorical field must have a null range", path + "/range");
  } else {
    if (!values.is_null()) throw StructureError("numeric field must have null values", path + "/values");
    if (!range.is_object()) throw StructureError("numeric field needs a range object", path + "/range");
    NumericRange r;
    r.min = require_number(range, "min", path + "/range");
    r.max = require_number(range, "max", path + "/range");
    r.unit = range.contains("unit") && range["unit"].is_string() ? range["unit"].get<std::string>() : "";
    if (!(r.min < r.max)) throw DataError("numeric range needs min < max", path + "/range");
    spec.range = r;
  }

  if (auto it = entry.find("aliases"); it != entry.end() && !it->is_null()) {
    if (!it->is_object()) throw StructureError("aliases must be an object", path + "/aliases");
    for (const auto& [value, list] : it->items()) {
      auto apath = path + "/aliases/" + value;
      if (!spec.has_value(value)) throw DataError("alias target '" + value + "' is not a value of the field", apath);
      if (!list.is_array()) throw StructureError("alias list must be an array", apath);
      for (const auto& a : list) {
        if (!a.is_string() || a.get<std::string>().empty()) throw StructureError("alias must be a non-empty string", apath);
        spec.aliases[value].push_back(a.get<std::string>());
      }
    }
  }
  return spec;
}

}  // namespace

FieldCatalog load_catalog(std::string_view manifest_text) {
  json doc;
  try {
    doc = json::parse(manifest_text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("catalog manifest is not valid JSON: ") + e.what(),
                      "byte " + std::to_string(e.byte));
  }
  if (!doc.is_object()) throw StructureError("catalog manifest must be a JSON object", "/");
  auto version = require_string(doc, "version", "");
  const auto& fields = require(doc, "fields", "");
  if (!fields.is_array()) throw StructureError("'fields' must be an array", "/fields");
  if (fields.empty()) throw DataError("catalog must define at least one field", "/fields");

  std::vector<FieldSpec> specs;
  specs.reserve(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    specs.push_back(parse_field(fields[i], "/fields/" + std::to_string(i)));
  }
  return FieldCatalog(std::move(version), std::move(specs));
}

FieldCatalog load_catalog_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open catalog manifest", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_catalog(buf.str());
}

}  // namespace cohort

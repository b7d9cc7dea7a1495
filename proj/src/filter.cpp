#include "cohort/filter.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <set>

#include "cohort/error.hpp"
#include "cohort/json_io.hpp"

namespace cohort {

using json = nlohmann::json;

std::string_view to_string(Comparator op) {
  switch (op) {
    case Comparator::kLessEqual:
      return "<=";
    case Comparator::kLess:
      return "<";
    case Comparator::kGreaterEqual:
      return ">=";
    case Comparator::kGreater:
      return ">";
  }
  return "?";
}

bool parse_comparator(std::string_view text, Comparator& out) {
  if (text == "<=") {
    out = Comparator::kLessEqual;
  } else if (text == "<") {
    out = Comparator::kLess;
  } else if (text == ">=") {
    out = Comparator::kGreaterEqual;
  } else if (text == ">") {
    out = Comparator::kGreater;
  } else {
    return false;
  }
  return true;
}

bool compare(double lhs, Comparator op, double rhs) {
  switch (op) {
    case Comparator::kLessEqual:
      return lhs <= rhs;
    case Comparator::kLess:
      return lhs < rhs;
    case Comparator::kGreaterEqual:
      return lhs >= rhs;
    case Comparator::kGreater:
      return lhs > rhs;
  }
  return false;
}

const std::string& leaf_field(const Leaf& leaf) {
  return std::visit([](const auto& l) -> const std::string& { return l.field; }, leaf);
}

std::vector<const Issue*> ValidationReport::errors() const {
  std::vector<const Issue*> out;
  for (const auto& issue : issues) {
    if (issue.severity == Severity::kError) out.push_back(&issue);
  }
  return out;
}

namespace {

constexpr std::size_t kMaxDepth = 8;

struct DepthExceeded {};

bool has_upper(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isupper(c) != 0; });
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void expect_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& path) {
  if (!obj.is_object()) throw StructureError("expected an object", path.empty() ? "/" : path);
  for (const char* key : keys) {
    if (!obj.contains(key)) throw StructureError(std::string("missing key '") + key + "'", path.empty() ? "/" : path);
  }
  if (obj.size() != keys.size()) {
    for (const auto& [k, _] : obj.items()) {
      bool known = std::any_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; });
      if (!known) throw StructureError("unexpected key '" + k + "'", path.empty() ? "/" : path);
    }
  }
}

Leaf parse_leaf(const json& node, const std::string& path, std::vector<Issue>& warnings) {
  expect_keys(node, {"op", "content"}, path);
  const auto& op_node = node["op"];
  if (!op_node.is_string()) throw StructureError("'op' must be a string", path + "/op");
  auto op = op_node.get<std::string>();
  if (op == "and") throw StructureError("nested conjunctions are not supported", path + "/op");

  const auto& content = node["content"];
  const auto content_path = path + "/content";
  expect_keys(content, {"field", "value"}, content_path);
  if (!content["field"].is_string()) throw StructureError("'field' must be a string", content_path + "/field");
  auto field = content["field"].get<std::string>();
  const auto& value = content["value"];
  const auto value_path = content_path + "/value";

  if (op == "in") {
    if (!value.is_array()) throw StructureError("'in' needs a list of values", value_path);
    if (value.empty()) throw StructureError("'in' needs at least one value", value_path);
    CategoricalLeaf leaf{std::move(field), {}};
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (!value[i].is_string()) throw StructureError("value must be a string", value_path + "/" + std::to_string(i));
      auto v = value[i].get<std::string>();
      if (has_upper(v)) {
        warnings.push_back({Severity::kWarning, value_path + "/" + std::to_string(i), "value '" + v + "' lowercased"});
        v = to_lower(std::move(v));
      }
      leaf.values.push_back(std::move(v));
    }
    return leaf;
  }

  Comparator cmp{};
  if (!parse_comparator(op, cmp)) throw StructureError("unknown operator '" + op + "'", path + "/op");
  if (!value.is_number()) throw StructureError("comparison needs a numeric value", value_path);
  return NumericLeaf{std::move(field), cmp, value.get<double>()};
}

}  // namespace

ParsedFilter parse_filter_json(const json& root, const std::string& path) {
  ParsedFilter out;
  expect_keys(root, {"op", "content"}, path);
  if (!root["op"].is_string() || root["op"].get<std::string>() != "and") {
    throw StructureError("top-level 'op' must be \"and\"", path + "/op");
  }
  const auto& content = root["content"];
  if (!content.is_array()) throw StructureError("top-level 'content' must be a list", path + "/content");
  for (std::size_t i = 0; i < content.size(); ++i) {
    out.filter.leaves.push_back(parse_leaf(content[i], path + "/content/" + std::to_string(i), out.warnings));
  }
  return out;
}

ParsedFilter parse_filter(std::string_view text) {
  json root;
  try {
    json::parser_callback_t guard = [](int depth, json::parse_event_t, json&) {
      if (static_cast<std::size_t>(depth) > kMaxDepth) throw DepthExceeded{};
      return true;
    };
    root = json::parse(text.begin(), text.end(), guard);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("filter is not valid JSON: ") + e.what(), "byte " + std::to_string(e.byte));
  } catch (const DepthExceeded&) {
    throw StructureError("filter nesting is too deep", "/");
  } catch (const json::exception& e) {
    throw SyntaxError(std::string("filter is not valid JSON: ") + e.what());
  }
  return parse_filter_json(root);
}

ValidationReport validate(const Filter& filter, const FieldCatalog& catalog) {
  ValidationReport report;
  auto error = [&](std::string path, std::string message) {
    report.issues.push_back({Severity::kError, std::move(path), std::move(message)});
  };

  if (filter.leaves.empty()) {
    report.issues.push_back({Severity::kWarning, "/content", "null filter matches all cases"});
  }

  std::set<std::string> seen_fields;
  for (std::size_t i = 0; i < filter.leaves.size(); ++i) {
    const auto& leaf = filter.leaves[i];
    const auto base = "/content/" + std::to_string(i) + "/content";
    const auto& name = leaf_field(leaf);
    if (!seen_fields.insert(name).second) error(base + "/field", "duplicate field '" + name + "'");

    const FieldSpec* spec = catalog.find(name);
    if (spec == nullptr) {
      error(base + "/field", "unknown field '" + name + "'");
      continue;
    }

    if (const auto* cat = std::get_if<CategoricalLeaf>(&leaf)) {
      if (!spec->is_categorical()) {
        error("/content/" + std::to_string(i) + "/op", "field '" + name + "' is numeric and needs a comparison operator");
        continue;
      }
      if (cat->values.empty()) error(base + "/value", "value list is empty");
      std::set<std::string_view> seen_values;
      for (std::size_t j = 0; j < cat->values.size(); ++j) {
        const auto& v = cat->values[j];
        const auto vpath = base + "/value/" + std::to_string(j);
        if (!seen_values.insert(v).second) error(vpath, "duplicate value '" + v + "'");
        if (!spec->has_value(v)) error(vpath, "value '" + v + "' is not allowed for field '" + name + "'");
      }
    } else {
      const auto& num = std::get<NumericLeaf>(leaf);
      if (!spec->is_numeric()) {
        error("/content/" + std::to_string(i) + "/op", "field '" + name + "' is categorical and needs 'in'");
        continue;
      }
      if (!std::isfinite(num.value) || num.value < spec->range->min || num.value > spec->range->max) {
        error(base + "/value", "value " + format_number(num.value) + " is outside [" + format_number(spec->range->min) +
                                   ", " + format_number(spec->range->max) + "] for field '" + name + "'");
      }
    }
  }

  report.valid = report.errors().empty();
  return report;
}

Filter canonicalize(Filter filter) {
  for (auto& leaf : filter.leaves) {
    if (auto* cat = std::get_if<CategoricalLeaf>(&leaf)) std::sort(cat->values.begin(), cat->values.end());
  }
  std::stable_sort(filter.leaves.begin(), filter.leaves.end(),
                   [](const Leaf& a, const Leaf& b) { return leaf_field(a) < leaf_field(b); });
  return filter;
}

std::string format_number(double value) {
  if (std::isfinite(value) && value == std::trunc(value) && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string quote_json_string(std::string_view s) {
  return json(std::string(s)).dump();
}

std::string serialize_canonical(const Filter& filter) {
  const Filter canon = canonicalize(filter);
  std::string out = R"({"op":"and","content":[)";
  bool first = true;
  for (const auto& leaf : canon.leaves) {
    if (!first) out += ',';
    first = false;
    if (const auto* cat = std::get_if<CategoricalLeaf>(&leaf)) {
      out += R"({"op":"in","content":{"field":)";
      out += quote_json_string(cat->field);
      out += R"(,"value":[)";
      for (std::size_t i = 0; i < cat->values.size(); ++i) {
        if (i) out += ',';
        out += quote_json_string(cat->values[i]);
      }
      out += "]}}";
    } else {
      const auto& num = std::get<NumericLeaf>(leaf);
      out += R"({"op":")";
      out += to_string(num.op);
      out += R"(","content":{"field":)";
      out += quote_json_string(num.field);
      out += R"(,"value":)";
      out += format_number(num.value);
      out += "}}";
    }
  }
  out += "]}";
  return out;
}

bool lint_null(const Filter& filter) { return filter.leaves.empty(); }

nlohmann::ordered_json filter_to_json(const Filter& filter) { return nlohmann::ordered_json::parse(serialize_canonical(filter)); }

nlohmann::ordered_json report_to_json(const ValidationReport& report) {
  json issues = json::array();
  for (const auto& issue : report.issues) {
    issues.push_back({{"severity", issue.severity == Severity::kError ? "error" : "warning"},
                      {"path", issue.path},
                      {"message", issue.message}});
  }
  return {{"valid", report.valid}, {"issues", std::move(issues)}};
}

}  // namespace cohort

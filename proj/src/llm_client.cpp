#include "cohort/llm_client.hpp"

#include <cstdlib>

#include <httplib.h>

#include "cohort/error.hpp"

namespace cohort {

using json = nlohmann::json;

namespace {

constexpr std::string_view kSystemPrompt =
    "Construct NCI GDC cohort filters based on the input cohort description using the given list of possible "
    "fields and values.";

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? std::string(v) : std::move(fallback);
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("endpoint URL needs a scheme", url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

}  // namespace

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig c;
  c.base_url = env_or("COHORT_LLM_ENDPOINT", "");
  c.api_key_env = env_or("COHORT_LLM_KEY_VAR", "");
  c.model = env_or("COHORT_LLM_MODEL", c.model);
  return c;
}

std::string render_field_value_list(const FieldCatalog& catalog) {
  std::string out;
  for (const auto& f : catalog.fields()) {
    out += f.name;
    out += ": ";
    if (f.is_numeric()) {
      out += "number from " + format_number(f.range->min) + " to " + format_number(f.range->max);
      if (!f.range->unit.empty()) out += " (" + f.range->unit + ")";
    } else {
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (i) out += ", ";
        out += f.values[i];
      }
    }
    out += '\n';
  }
  return out;
}

json filter_json_schema(const FieldCatalog& catalog) {
  json categorical_fields = json::array();
  json numeric_fields = json::array();
  json all_values = json::array();
  for (const auto& f : catalog.fields()) {
    if (f.is_numeric()) {
      numeric_fields.push_back(f.name);
    } else {
      categorical_fields.push_back(f.name);
      for (const auto& v : f.values) all_values.push_back(v);
    }
  }

  auto leaf = [](json op, json field, json value) {
    return json{{"type", "object"},
                {"properties",
                 {{"op", std::move(op)},
                  {"content",
                   {{"type", "object"},
                    {"properties", {{"field", std::move(field)}, {"value", std::move(value)}}},
                    {"required", {"field", "value"}},
                    {"additionalProperties", false}}}}},
                {"required", {"op", "content"}},
                {"additionalProperties", false}};
  };

  json variants = json::array();
  if (!categorical_fields.empty()) {
    variants.push_back(leaf({{"const", "in"}}, {{"enum", categorical_fields}},
                            {{"type", "array"}, {"items", {{"enum", all_values}}}, {"minItems", 1}}));
  }
  if (!numeric_fields.empty()) {
    variants.push_back(
        leaf({{"enum", {">=", "<=", ">", "<"}}}, {{"enum", numeric_fields}}, {{"type", "number"}}));
  }

  return {{"type", "object"},
          {"properties",
           {{"op", {{"const", "and"}}}, {"content", {{"type", "array"}, {"items", {{"anyOf", variants}}}}}}},
          {"required", {"op", "content"}},
          {"additionalProperties", false}};
}

json build_chat_request(std::string_view query, const EndpointConfig& config, const FieldCatalog& catalog) {
  std::string user = "Here is the list of possible fields and values:\n\n";
  user += render_field_value_list(catalog);
  user += "\nUse the above properties to construct a NCI GDC cohort filter for the following cohort description:\n";
  user += query;

  return {{"model", config.model},
          {"messages",
           json::array({{{"role", "system"}, {"content", kSystemPrompt}}, {{"role", "user"}, {"content", user}}})},
          {"temperature", 0},
          {"seed", config.seed},
          {"max_tokens", config.max_tokens},
          {"response_format",
           {{"type", "json_schema"},
            {"json_schema", {{"name", "cohort_filter"}, {"strict", true}, {"schema", filter_json_schema(catalog)}}}}}};
}

Filter llm_generate(std::string_view query, const EndpointConfig& config, const FieldCatalog& catalog,
                    const SchemaFsm& fsm) {
  if (config.base_url.empty()) throw TransportError("no model endpoint configured");
  const auto url = split_url(config.base_url);

  httplib::Client client(url.origin);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto body = build_chat_request(query, config, catalog).dump();
  auto res = client.Post(url.prefix + "/chat/completions", headers, body, "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()), config.base_url);
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("endpoint answered HTTP " + std::to_string(res->status), config.base_url);
  }

  std::string text;
  try {
    const auto reply = json::parse(res->body);
    text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw InvalidGenerationError("reply is not a chat completion", res->body);
  }

  const auto first = text.find_first_not_of(" \t\r\n");
  const auto last = text.find_last_not_of(" \t\r\n");
  const std::string trimmed = first == std::string::npos ? std::string() : text.substr(first, last - first + 1);
  if (!fsm.accepts(trimmed)) throw InvalidGenerationError("generated text is not a valid filter", text);

  auto parsed = parse_filter(trimmed);
  if (!validate(parsed.filter, catalog).valid) {
    throw InvalidGenerationError("generated filter does not validate", text);
  }
  return canonicalize(std::move(parsed.filter));
}

}  // namespace cohort

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cohort/catalog.hpp"
#include "cohort/filter.hpp"
#include "cohort/fsm.hpp"

namespace cohort {

/// Where and how to reach an OpenAI-style chat-completions endpoint.
struct EndpointConfig {
  std::string base_url;     // e.g. http://127.0.0.1:8000/v1
  std::string model = "cohort-filter";
  std::string api_key_env;  // name of the environment variable holding the key; empty for none
  std::uint64_t seed = 42;
  int max_tokens = 1024;
  int timeout_seconds = 60;

  /// COHORT_LLM_ENDPOINT, COHORT_LLM_KEY_VAR and COHORT_LLM_MODEL. Returns a
  /// config with an empty base_url when no endpoint is set.
  static EndpointConfig from_env();
};

/// One line per catalog field: categorical fields list their values,
/// numeric fields their range and unit.
std::string render_field_value_list(const FieldCatalog& catalog);

/// JSON schema for a canonical filter over this catalog, used as the
/// structured-output constraint of the request.
nlohmann::json filter_json_schema(const FieldCatalog& catalog);

/// Full chat-completions request body: system and user messages, temperature
/// 0, fixed seed, completion-token cap and response_format.
nlohmann::json build_chat_request(std::string_view query, const EndpointConfig& config, const FieldCatalog& catalog);

/// Sends the request and checks the returned text with the automaton.
/// Throws TransportError for connection failures and non-2xx replies, and
/// InvalidGenerationError (carrying the raw text) when the reply is not an
/// accepted filter.
Filter llm_generate(std::string_view query, const EndpointConfig& config, const FieldCatalog& catalog,
                    const SchemaFsm& fsm);

}  // namespace cohort

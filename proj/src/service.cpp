#include "cohort/service.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>

#include <httplib.h>
#include <json.hpp>

#include "cohort/error.hpp"
#include "cohort/json_io.hpp"

namespace cohort {

using ojson = nlohmann::ordered_json;

namespace {

HttpResponse json_response(int status, const ojson& doc) { return {status, "application/json", doc.dump()}; }

ojson issue_to_json(const Issue& issue) {
  return {{"severity", issue.severity == Severity::kError ? "error" : "warning"},
          {"path", issue.path},
          {"message", issue.message}};
}

HttpResponse bad_request(const std::vector<Issue>& issues) {
  ojson list = ojson::array();
  for (const auto& i : issues) list.push_back(issue_to_json(i));
  return json_response(400, {{"error", "invalid request"}, {"issues", list}});
}

HttpResponse bad_request(const std::string& path, const std::string& message) {
  return bad_request(std::vector<Issue>{{Severity::kError, path, message}});
}

std::optional<nlohmann::json> parse_body(std::string_view body, HttpResponse& failure) {
  try {
    auto doc = nlohmann::json::parse(body);
    if (!doc.is_object()) {
      failure = bad_request("", "request body must be a JSON object");
      return std::nullopt;
    }
    return doc;
  } catch (const nlohmann::json::parse_error& e) {
    failure = bad_request("", std::string("request body is not JSON: ") + e.what());
    return std::nullopt;
  }
}

// The body's "filter" member, parsed structurally. On failure `failure` holds
// the 400 response.
std::optional<ParsedFilter> filter_from_body(std::string_view body, HttpResponse& failure) {
  auto doc = parse_body(body, failure);
  if (!doc) return std::nullopt;
  auto it = doc->find("filter");
  if (it == doc->end()) {
    failure = bad_request("/filter", "missing member 'filter'");
    return std::nullopt;
  }
  try {
    return parse_filter_json(*it, "/filter");
  } catch (const Error& e) {
    failure = bad_request(e.path(), e.what());
    return std::nullopt;
  }
}

std::optional<Filter> valid_filter_from_body(std::string_view body, const FieldCatalog& catalog,
                                             HttpResponse& failure) {
  auto parsed = filter_from_body(body, failure);
  if (!parsed) return std::nullopt;
  auto report = validate(parsed->filter, catalog);
  if (!report.valid) {
    for (auto& issue : report.issues) issue.path = "/filter" + issue.path;
    failure = bad_request(report.issues);
    return std::nullopt;
  }
  return std::move(parsed->filter);
}

ojson diagnostics_to_json(const ParseDiagnostics& d, std::string_view query) {
  ojson matched = ojson::array();
  for (const auto& m : d.matched_spans) {
    matched.push_back({{"start", m.start}, {"end", m.end}, {"field", m.field}, {"value", m.value}});
  }
  ojson unmatched = ojson::array();
  for (const auto& u : d.unmatched_text) {
    unmatched.push_back({{"start", u.start}, {"end", u.end}, {"text", std::string(query.substr(u.start, u.end - u.start))}});
  }
  return {{"backend", "lexicon"},
          {"confidence", std::string(to_string(d.confidence))},
          {"matched_spans", matched},
          {"unmatched_text", unmatched}};
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? std::string(v) : std::move(fallback);
}

std::size_t env_number(const char* name, std::size_t fallback) {
  const auto text = env_or(name, "");
  if (text.empty()) return fallback;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ContractError(std::string("environment variable ") + name + " must be a non-negative integer");
  }
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  c.catalog_path = env_or("COHORT_CATALOG", "");
  c.cases_path = env_or("COHORT_CASES", "");
  c.host = env_or("COHORT_HOST", c.host);
  c.port = static_cast<int>(env_number("COHORT_PORT", static_cast<std::size_t>(c.port)));
  c.page_size = env_number("COHORT_PAGE_SIZE", c.page_size);
  c.llm = EndpointConfig::from_env();
  return c;
}

CohortService::CohortService(CaseIndex index, EndpointConfig llm, std::size_t page_size)
    : index_(std::move(index)),
      lexicon_(index_.catalog()),
      fsm_(compile_fsm(index_.catalog())),
      llm_(std::move(llm)),
      page_size_(page_size) {}

HttpResponse CohortService::fields() const { return {200, "application/json", catalog().to_manifest()}; }

HttpResponse CohortService::health() const { return json_response(200, {{"status", "ok"}}); }

HttpResponse CohortService::generate(std::string_view body) const {
  HttpResponse failure;
  auto doc = parse_body(body, failure);
  if (!doc) return failure;
  auto it = doc->find("query");
  if (it == doc->end() || !it->is_string()) return bad_request("/query", "'query' must be a string");
  const auto query = it->get<std::string>();

  std::optional<std::string> llm_error;
  if (!llm_.base_url.empty()) {
    try {
      const auto filter = llm_generate(query, llm_, catalog(), fsm_);
      return json_response(200, {{"filter", filter_to_json(filter)}, {"diagnostics", {{"backend", "llm"}}}});
    } catch (const Error& e) {
      llm_error = e.what();
    }
  }

  const auto parsed = parse_query(query, lexicon_, catalog());
  auto diagnostics = diagnostics_to_json(parsed.diagnostics, query);
  if (llm_error) diagnostics["llm_error"] = *llm_error;
  return json_response(200, {{"filter", filter_to_json(parsed.filter)}, {"diagnostics", diagnostics}});
}

HttpResponse CohortService::validate_filter(std::string_view body) const {
  HttpResponse failure;
  auto parsed = filter_from_body(body, failure);
  if (!parsed) return failure;
  auto report = validate(parsed->filter, catalog());
  report.issues.insert(report.issues.end(), parsed->warnings.begin(), parsed->warnings.end());
  for (auto& issue : report.issues) issue.path = "/filter" + issue.path;
  return json_response(200, report_to_json(report));
}

HttpResponse CohortService::execute_filter(std::string_view body) const {
  HttpResponse failure;
  auto filter = valid_filter_from_body(body, catalog(), failure);
  if (!filter) return failure;
  const auto docs = index_.match(*filter);
  ojson ids = ojson::array();
  for (std::size_t i = 0; i < docs.size() && i < page_size_; ++i) ids.push_back(index_.records()[docs[i]].case_id);
  return json_response(200, {{"count", docs.size()}, {"case_ids", ids}});
}

HttpResponse CohortService::export_filter(std::string_view body) const {
  HttpResponse failure;
  auto filter = valid_filter_from_body(body, catalog(), failure);
  if (!filter) return failure;
  return {200, "text/plain", format_export(index_.ids(index_.match(*filter)))};
}

HttpResponse CohortService::handle(std::string_view method, std::string_view path, std::string_view body) const {
  try {
    if (method == "GET" && path == "/api/fields") return fields();
    if (method == "GET" && path == "/healthz") return health();
    if (method == "POST" && path == "/api/generate") return generate(body);
    if (method == "POST" && path == "/api/validate") return validate_filter(body);
    if (method == "POST" && path == "/api/execute") return execute_filter(body);
    if (method == "POST" && path == "/api/export") return export_filter(body);
    return json_response(404, {{"error", "no such endpoint"}});
  } catch (const std::exception& e) {
    return json_response(500, {{"error", e.what()}});
  }
}

void CohortService::mount(httplib::Server& server) const {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  for (const char* path : {"/api/fields", "/healthz"}) server.Get(path, route);
  for (const char* path : {"/api/generate", "/api/validate", "/api/execute", "/api/export"}) server.Post(path, route);
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    res.status = 500;
    res.set_content(R"({"error":"internal error"})", "application/json");
  });
}

void http_serve(const ServiceConfig& config) {
  if (config.catalog_path.empty()) throw ContractError("no catalog configured (COHORT_CATALOG)");
  if (config.cases_path.empty()) throw ContractError("no case file configured (COHORT_CASES)");
  auto catalog = load_catalog_file(config.catalog_path);
  auto index = load_cases_file(config.cases_path, catalog);
  const CohortService service(std::move(index), config.llm, config.page_size);

  httplib::Server server;
  service.mount(server);
  std::cerr << "serving " << service.index().size() << " cases on http://" << config.host << ':' << config.port
            << '\n';
  if (!server.listen(config.host, config.port)) {
    throw IoError("cannot listen on " + config.host + ":" + std::to_string(config.port));
  }
}

}  // namespace cohort

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "cohort/case_index.hpp"
#include "cohort/fsm.hpp"
#include "cohort/llm_client.hpp"
#include "cohort/nl_parser.hpp"

namespace httplib {
class Server;
}

namespace cohort {

struct ServiceConfig {
  std::filesystem::path catalog_path;
  std::filesystem::path cases_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t page_size = 100;
  EndpointConfig llm;

  /// COHORT_CATALOG, COHORT_CASES, COHORT_PORT, COHORT_HOST, COHORT_PAGE_SIZE
  /// plus the model endpoint variables.
  static ServiceConfig from_env();
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Stateless request handling over an immutable catalog and index. Safe to
/// call from many threads at once.
class CohortService {
 public:
  CohortService(CaseIndex index, EndpointConfig llm = {}, std::size_t page_size = 100);

  CohortService(const CohortService&) = delete;
  CohortService& operator=(const CohortService&) = delete;

  HttpResponse fields() const;
  HttpResponse generate(std::string_view body) const;
  HttpResponse validate_filter(std::string_view body) const;
  HttpResponse execute_filter(std::string_view body) const;
  HttpResponse export_filter(std::string_view body) const;
  HttpResponse health() const;

  /// Routes (method, path) to the handlers above; unknown routes give 404.
  /// Unexpected exceptions become 500.
  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  /// Registers every endpoint on `server`.
  void mount(httplib::Server& server) const;

  const CaseIndex& index() const noexcept { return index_; }
  const FieldCatalog& catalog() const noexcept { return index_.catalog(); }

 private:
  CaseIndex index_;
  Lexicon lexicon_;
  SchemaFsm fsm_;
  EndpointConfig llm_;
  std::size_t page_size_;
};

/// Loads the catalog and cases named by `config` and serves until the process
/// is stopped.
void http_serve(const ServiceConfig& config);

}  // namespace cohort

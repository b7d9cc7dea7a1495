#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cohort/error.hpp"
#include "cohort/rng.hpp"
#include "cohort/service.hpp"
#include "cohort/synth.hpp"
#include "test_support.hpp"

namespace cohort {
namespace {

using nlohmann::json;
using testing::desk_catalog;

CaseIndex five_index() { return load_cases_file(testing::test_data_dir() / "five_cases.jsonl", desk_catalog()); }

json body_of(const HttpResponse& r) { return json::parse(r.body); }

std::string filter_body(std::string_view filter_json) { return std::string(R"({"filter":)") + std::string(filter_json) + "}"; }

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

class ServiceTest : public ::testing::Test {
 protected:
  CohortService service_{five_index(), EndpointConfig{}, 2};
};

TEST_F(ServiceTest, HealthAndFields) {
  EXPECT_EQ(body_of(service_.health())["status"], "ok");
  const auto fields = service_.fields();
  EXPECT_EQ(fields.status, 200);
  EXPECT_EQ(load_catalog(fields.body).size(), desk_catalog().size());
}

TEST_F(ServiceTest, GenerateReturnsValidFilterAndDiagnostics) {
  const std::string query = "cases with gene expression data derived from RNA sequencing for lung adenocarcinoma";
  const auto r = service_.generate(json{{"query", query}}.dump());
  ASSERT_EQ(r.status, 200);
  const auto doc = body_of(r);
  const auto f = testing::filter_of(doc["filter"].dump());
  EXPECT_TRUE(validate(f, desk_catalog()).valid);
  EXPECT_EQ(doc["diagnostics"]["backend"], "lexicon");
  EXPECT_EQ(doc["diagnostics"]["confidence"], "partial");
  for (const auto& span : doc["diagnostics"]["unmatched_text"]) {
    EXPECT_EQ(query.substr(span["start"].get<std::size_t>(),
                           span["end"].get<std::size_t>() - span["start"].get<std::size_t>()),
              span["text"].get<std::string>());
  }
  EXPECT_FALSE(doc["diagnostics"]["matched_spans"].empty());
}

TEST_F(ServiceTest, GenerateFallsBackWhenModelUnreachable) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  EndpointConfig llm;
  llm.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  llm.timeout_seconds = 2;
  const CohortService service(five_index(), llm);
  const auto doc = body_of(service.generate(R"({"query":"all cases"})"));
  EXPECT_EQ(doc["filter"], json::parse(R"({"op":"and","content":[]})"));
  EXPECT_EQ(doc["diagnostics"]["backend"], "lexicon");
  EXPECT_TRUE(doc["diagnostics"].contains("llm_error"));
}

TEST_F(ServiceTest, GenerateRejectsBadBodies) {
  for (const auto* body : {"", "[]", "{}", R"({"query":3})", "{nope"}) {
    const auto r = service_.generate(body);
    EXPECT_EQ(r.status, 400) << body;
    EXPECT_EQ(body_of(r)["error"], "invalid request");
  }
}

TEST_F(ServiceTest, ValidateReportsUnknownFieldWith200) {
  const auto r = service_.validate_filter(
      filter_body(R"({"op":"and","content":[{"op":"in","content":{"field":"cases.bogus","value":["x"]}}]})"));
  ASSERT_EQ(r.status, 200);
  const auto doc = body_of(r);
  EXPECT_EQ(doc["valid"], false);
  ASSERT_FALSE(doc["issues"].empty());
  EXPECT_EQ(doc["issues"][0]["path"].get<std::string>().rfind("/filter/content/0", 0), 0u);
}

TEST_F(ServiceTest, ValidateRejectsStructuralErrors) {
  EXPECT_EQ(service_.validate_filter(R"({"nofilter":1})").status, 400);
  EXPECT_EQ(service_.validate_filter(filter_body(R"({"op":"or","content":[]})")).status, 400);
  EXPECT_EQ(body_of(service_.validate_filter(filter_body(R"({"op":"and","content":[]})")))["valid"], true);
}

TEST_F(ServiceTest, ExecuteCountsAndPages) {
  const auto all = body_of(service_.execute_filter(filter_body(R"({"op":"and","content":[]})")));
  EXPECT_EQ(all["count"], 5);
  EXPECT_EQ(all["case_ids"].size(), 2u);

  const auto target = body_of(service_.execute_filter(filter_body(
      R"({"op":"and","content":[{"op":"in","content":{"field":"cases.project.program.name","value":["target"]}},)"
      R"({"op":"<","content":{"field":"cases.diagnoses.age_at_diagnosis","value":18250}}]})")));
  EXPECT_EQ(target["count"], 1);
  EXPECT_EQ(target["case_ids"], json::array({"case-1"}));
}

TEST_F(ServiceTest, ExecuteRejectsInvalidFilter) {
  const auto r = service_.execute_filter(
      filter_body(R"({"op":"and","content":[{"op":"in","content":{"field":"cases.bogus","value":["x"]}}]})"));
  EXPECT_EQ(r.status, 400);
  EXPECT_FALSE(body_of(r)["issues"].empty());
}

TEST_F(ServiceTest, ExportIsSortedNewlineTerminatedText) {
  const auto r = service_.export_filter(filter_body(
      R"({"op":"and","content":[{"op":"in","content":{"field":"cases.project.program.name","value":["target"]}}]})"));
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "text/plain");
  EXPECT_EQ(r.body, "case-1\ncase-2\ncase-4\n");
  EXPECT_EQ(service_.export_filter(filter_body(
                R"({"op":"and","content":[{"op":"in","content":{"field":"cases.project.program.name","value":["mmrf"]}}]})"))
                .body,
            "");
}

TEST_F(ServiceTest, RoutingAndUnknownEndpoints) {
  EXPECT_EQ(service_.handle("GET", "/healthz", "").status, 200);
  EXPECT_EQ(service_.handle("GET", "/api/fields", "").status, 200);
  EXPECT_EQ(service_.handle("GET", "/api/nothing", "").status, 404);
  EXPECT_EQ(service_.handle("GET", "/api/execute", "").status, 404);
  EXPECT_EQ(service_.handle("POST", "/api/execute", "{}").status, 400);
}

TEST(ServiceRandom, CountMatchesExportLines) {
  const CohortService service(testing::synthetic_index());
  Rng rng(99);
  SynthConfig config;
  for (int i = 0; i < 100; ++i) {
    const auto f = sample_filter(rng, desk_catalog(), config);
    const auto body = filter_body(serialize_canonical(f));
    const auto count = body_of(service.execute_filter(body))["count"].get<std::size_t>();
    const auto exported = service.export_filter(body).body;
    ASSERT_EQ(count, line_count(exported));
    ASSERT_EQ(count, testing::naive_execute(f, testing::synthetic_index().records()).size());
  }
}

TEST(ServiceConfigEnv, ReadsVariables) {
  ::setenv("COHORT_PORT", "9123", 1);
  ::setenv("COHORT_PAGE_SIZE", "7", 1);
  auto c = ServiceConfig::from_env();
  EXPECT_EQ(c.port, 9123);
  EXPECT_EQ(c.page_size, 7u);
  ::setenv("COHORT_PORT", "abc", 1);
  EXPECT_THROW(ServiceConfig::from_env(), ContractError);
  ::unsetenv("COHORT_PORT");
  ::unsetenv("COHORT_PAGE_SIZE");
}

TEST(ServiceHttp, EndpointsOverRealSockets) {
  const CohortService service(five_index());
  httplib::Server server;
  service.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto fields = client.Get("/api/fields");
  ASSERT_TRUE(fields);
  EXPECT_EQ(load_catalog(fields->body).size(), desk_catalog().size());

  auto generated = client.Post("/api/generate", R"({"query":"tumor samples from target"})", "application/json");
  ASSERT_TRUE(generated);
  ASSERT_EQ(generated->status, 200);
  const auto filter = json::parse(generated->body)["filter"];

  auto executed = client.Post("/api/execute", json{{"filter", filter}}.dump(), "application/json");
  ASSERT_TRUE(executed);
  EXPECT_EQ(json::parse(executed->body)["count"], 2);

  auto exported = client.Post("/api/export", json{{"filter", filter}}.dump(), "application/json");
  ASSERT_TRUE(exported);
  EXPECT_EQ(exported->body, "case-1\ncase-4\n");
  EXPECT_NE(exported->get_header_value("Content-Type").find("text/plain"), std::string::npos);

  auto bad = client.Post("/api/validate", "not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  auto missing = client.Get("/api/unknown");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  thread.join();
}

}  // namespace
}  // namespace cohort

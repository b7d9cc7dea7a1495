#include <gtest/gtest.h>

#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cohort/error.hpp"
#include "cohort/llm_client.hpp"
#include "test_support.hpp"

namespace cohort {
namespace {

using nlohmann::json;
using testing::desk_catalog;

const Filter& cgci_filter() {
  static const Filter f{{CategoricalLeaf{"cases.project.program.name", {"cgci"}},
                         CategoricalLeaf{"cases.project.project_id", {"cgci-blgsp"}},
                         CategoricalLeaf{"cases.diagnoses.tissue_or_organ_of_origin", {"hematopoietic system, nos"}},
                         CategoricalLeaf{"cases.samples.preservation_method", {"ffpe"}}}};
  return f;
}

json completion(const std::string& content) {
  return {{"id", "x"}, {"choices", json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}})}};
}

// A local chat-completions endpoint that answers every request with a fixed
// reply and remembers the last request it saw.
class StubEndpoint {
 public:
  StubEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      res.status = status_;
      res.set_content(reply_, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubEndpoint() {
    server_.stop();
    thread_.join();
  }

  void reply(std::string body, int status = 200) {
    std::lock_guard lock(mu_);
    reply_ = std::move(body);
    status_ = status;
  }
  json last_request() {
    std::lock_guard lock(mu_);
    return json::parse(last_body_);
  }
  std::string last_auth() {
    std::lock_guard lock(mu_);
    return last_auth_;
  }

  EndpointConfig config() const {
    EndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
    c.timeout_seconds = 5;
    return c;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::string reply_;
  int status_ = 200;
  std::string last_body_;
  std::string last_auth_;
};

class LlmClientTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { fsm_ = new SchemaFsm(compile_fsm(desk_catalog())); }
  static void TearDownTestSuite() {
    delete fsm_;
    fsm_ = nullptr;
  }
  static SchemaFsm* fsm_;
  StubEndpoint stub_;
};

SchemaFsm* LlmClientTest::fsm_ = nullptr;

TEST_F(LlmClientTest, AcceptedReplyIsReturnedCanonical) {
  stub_.reply(completion("  " + serialize_canonical(cgci_filter()) + "\n").dump());
  const auto f = llm_generate("ffpe blood samples from cgci-blgsp", stub_.config(), desk_catalog(), *fsm_);
  EXPECT_EQ(f, canonicalize(cgci_filter()));
}

TEST_F(LlmClientTest, RequestCarriesDecodingSettings) {
  stub_.reply(completion(serialize_canonical(cgci_filter())).dump());
  auto config = stub_.config();
  config.seed = 7;
  llm_generate("cgci cases", config, desk_catalog(), *fsm_);
  const auto req = stub_.last_request();
  EXPECT_EQ(req["model"], "cohort-filter");
  EXPECT_EQ(req["temperature"], 0);
  EXPECT_EQ(req["seed"], 7);
  EXPECT_EQ(req["max_tokens"], 1024);
  EXPECT_EQ(req["response_format"]["type"], "json_schema");
  EXPECT_EQ(req["response_format"]["json_schema"]["strict"], true);
  ASSERT_EQ(req["messages"].size(), 2u);
  EXPECT_EQ(req["messages"][0]["role"], "system");
  EXPECT_EQ(req["messages"][1]["role"], "user");
  const auto user = req["messages"][1]["content"].get<std::string>();
  EXPECT_EQ(user.rfind("Here is the list of possible fields and values:\n\n", 0), 0u);
  EXPECT_NE(user.find("cases.project.program.name: target, tcga"), std::string::npos);
  EXPECT_NE(user.find("cases.diagnoses.age_at_diagnosis: number from"), std::string::npos);
  EXPECT_TRUE(user.ends_with("cohort description:\ncgci cases"));
  EXPECT_TRUE(stub_.last_auth().empty());
}

TEST_F(LlmClientTest, BearerKeyComesFromNamedVariable) {
  stub_.reply(completion(serialize_canonical(cgci_filter())).dump());
  ::setenv("COHORT_TEST_LLM_KEY", "sekret", 1);
  auto config = stub_.config();
  config.api_key_env = "COHORT_TEST_LLM_KEY";
  llm_generate("q", config, desk_catalog(), *fsm_);
  EXPECT_EQ(stub_.last_auth(), "Bearer sekret");
  ::unsetenv("COHORT_TEST_LLM_KEY");
}

TEST_F(LlmClientTest, NonFilterTextIsInvalidGeneration) {
  stub_.reply(completion("not json").dump());
  try {
    llm_generate("q", stub_.config(), desk_catalog(), *fsm_);
    FAIL() << "expected InvalidGenerationError";
  } catch (const InvalidGenerationError& e) {
    EXPECT_EQ(e.raw_text(), "not json");
  }
}

TEST_F(LlmClientTest, UnknownFieldIsInvalidGeneration) {
  stub_.reply(completion(R"({"op":"and","content":[{"op":"in","content":{"field":"cases.bogus","value":["x"]}}]})").dump());
  EXPECT_THROW(llm_generate("q", stub_.config(), desk_catalog(), *fsm_), InvalidGenerationError);
}

TEST_F(LlmClientTest, MalformedCompletionIsInvalidGeneration) {
  stub_.reply(R"({"choices":[]})");
  EXPECT_THROW(llm_generate("q", stub_.config(), desk_catalog(), *fsm_), InvalidGenerationError);
}

TEST_F(LlmClientTest, HttpErrorIsTransportError) {
  stub_.reply("{}", 503);
  EXPECT_THROW(llm_generate("q", stub_.config(), desk_catalog(), *fsm_), TransportError);
}

TEST_F(LlmClientTest, UnreachableEndpointIsTransportError) {
  // Bind and release a port so nothing is listening on it.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  EndpointConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  config.timeout_seconds = 2;
  EXPECT_THROW(llm_generate("q", config, desk_catalog(), *fsm_), TransportError);
  EXPECT_THROW(llm_generate("q", EndpointConfig{}, desk_catalog(), *fsm_), TransportError);
}

TEST(FilterJsonSchema, ConstrainsFieldsAndValues) {
  const auto schema = filter_json_schema(desk_catalog());
  EXPECT_EQ(schema["properties"]["op"]["const"], "and");
  const auto& variants = schema["properties"]["content"]["items"]["anyOf"];
  ASSERT_EQ(variants.size(), 2u);
  const auto& fields = variants[0]["properties"]["content"]["properties"]["field"]["enum"];
  EXPECT_NE(std::find(fields.begin(), fields.end(), "cases.samples.tissue_type"), fields.end());
  const auto& ops = variants[1]["properties"]["op"]["enum"];
  EXPECT_EQ(ops.size(), 4u);
}

TEST(EndpointConfigEnv, ReadsVariables) {
  ::setenv("COHORT_LLM_ENDPOINT", "http://h:1/v1", 1);
  ::setenv("COHORT_LLM_MODEL", "m", 1);
  const auto c = EndpointConfig::from_env();
  EXPECT_EQ(c.base_url, "http://h:1/v1");
  EXPECT_EQ(c.model, "m");
  ::unsetenv("COHORT_LLM_ENDPOINT");
  ::unsetenv("COHORT_LLM_MODEL");
  EXPECT_TRUE(EndpointConfig::from_env().base_url.empty());
}

}  // namespace
}  // namespace cohort

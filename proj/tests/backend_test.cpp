#include "squadgen/backend.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "httplib.h"
#include "squadgen/http_transport.hpp"

using namespace squadgen;

namespace {

BackendConfig fast_config(Role role, int max_retries = 2,
                          int max_concurrency = 4) {
  BackendConfig cfg;
  cfg.role = role;
  cfg.max_retries = max_retries;
  cfg.max_concurrency = max_concurrency;
  cfg.backoff_base_s = 0.001;
  return cfg;
}

// Scripted transport: fails `failures` times (with the given status),
// then succeeds. Tracks attempts and peak concurrency.
class ScriptedTransport final : public Transport {
 public:
  ScriptedTransport(int failures, int fail_status, nlohmann::json response,
                    std::chrono::milliseconds max_delay = {})
      : failures_(failures), fail_status_(fail_status),
        response_(std::move(response)), max_delay_(max_delay) {}

  TransportReply send(Role, const nlohmann::json&) override {
    const int now = ++in_flight_;
    int peak = peak_in_flight_.load();
    while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
    }
    if (max_delay_.count()) {
      thread_local std::mt19937 rng(std::random_device{}());
      std::this_thread::sleep_for(std::chrono::milliseconds(
          rng() % static_cast<unsigned>(max_delay_.count() + 1)));
    }
    const int attempt = ++attempts_;
    --in_flight_;
    if (attempt <= failures_)
      return {fail_status_, {}, "scripted failure", true};
    return {200, response_.dump(), {}, false};
  }

  int attempts() const { return attempts_.load(); }
  int peak() const { return peak_in_flight_.load(); }

 private:
  const int failures_;
  const int fail_status_;
  const nlohmann::json response_;
  const std::chrono::milliseconds max_delay_;
  std::atomic<int> attempts_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
};

// Echoes the request index hidden in the prompt, with a random delay, so
// order preservation is observable under scrambled completion.
class EchoTransport final : public Transport {
 public:
  TransportReply send(Role, const nlohmann::json& request) override {
    thread_local std::mt19937 rng(std::random_device{}());
    std::this_thread::sleep_for(std::chrono::milliseconds(rng() % 10));
    const int now = ++in_flight_;
    int peak = peak_in_flight_.load();
    while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(rng() % 10));
    --in_flight_;
    const std::string prompt = request.value("prompt", "");
    if (prompt.find("fail") != std::string::npos)
      return {503, {}, "scripted permanent failure", true};
    return {200, nlohmann::json{{"text", prompt}}.dump(), {}, false};
  }

  int peak() const { return peak_in_flight_.load(); }

 private:
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
};

}  // namespace

TEST(Replay, ServesPrimedResponses) {
  ReplayFixture fixture;
  fixture.add(Role::llm, BackendClient::llm_request("hello"),
              {{"text", "canned"}});
  BackendClient client(fast_config(Role::llm),
                       std::make_shared<ReplayTransport>(fixture));
  auto r = client.complete("hello");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r, "canned");
}

TEST(Replay, StrictUnmatchedIsError) {
  ReplayFixture fixture;
  fixture.set_strict(true);
  BackendClient client(fast_config(Role::llm),
                       std::make_shared<ReplayTransport>(fixture));
  auto r = client.complete("never primed");
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.error.find("unmatched replay fixture"), std::string::npos);
}

TEST(Replay, NonStrictUnmatchedIsEmptyPayload) {
  ReplayFixture fixture;
  fixture.set_strict(false);
  BackendClient llm(fast_config(Role::llm),
                    std::make_shared<ReplayTransport>(fixture));
  auto r = llm.complete("anything");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r, "");

  BackendClient qg(fast_config(Role::qg),
                   std::make_shared<ReplayTransport>(fixture));
  auto pairs = qg.generate_questions("ctx");
  ASSERT_TRUE(pairs.ok());
  EXPECT_TRUE(pairs.value->empty());
}

TEST(Replay, FingerprintSurvivesFieldReordering) {
  const auto a = request_fingerprint(
      "reader", nlohmann::json::parse(R"({"context":"c","question":"q"})"));
  const auto b = request_fingerprint(
      "reader", nlohmann::json::parse(R"({"question":"q","context":"c"})"));
  EXPECT_EQ(a, b);
  // role participates in the fingerprint
  EXPECT_NE(a, request_fingerprint("llm", nlohmann::json::parse(
                                              R"({"context":"c","question":"q"})")));
}

TEST(Retry, TwoFailuresThenSuccess) {
  auto transport = std::make_shared<ScriptedTransport>(
      2, 500, nlohmann::json{{"text", "ok"}});
  BackendClient client(fast_config(Role::llm, /*max_retries=*/3), transport);
  auto r = client.complete_raw("p");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.value->attempt_count, 3);
  EXPECT_EQ(transport->attempts(), 3);
}

TEST(Retry, ExhaustsAfterConfiguredRetries) {
  auto transport = std::make_shared<ScriptedTransport>(
      100, 503, nlohmann::json{{"text", "never"}});
  BackendClient client(fast_config(Role::llm, /*max_retries=*/2), transport);
  auto r = client.complete_raw("p");
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.error.find("retries exhausted"), std::string::npos);
  EXPECT_EQ(transport->attempts(), 3);  // attempt_count <= max_retries + 1
}

TEST(Retry, ZeroRetriesSingleAttempt) {
  auto transport = std::make_shared<ScriptedTransport>(
      100, 0, nlohmann::json{{"text", "never"}});
  BackendClient client(fast_config(Role::reader, /*max_retries=*/0),
                       transport);
  auto r = client.answer_question("c", "q");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(transport->attempts(), 1);
}

TEST(Retry, AuthFailureNotRetried) {
  auto transport = std::make_shared<ScriptedTransport>(
      100, 401, nlohmann::json{{"text", "never"}});
  BackendClient client(fast_config(Role::llm, /*max_retries=*/5), transport);
  auto r = client.complete_raw("p");
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.error.find("non-retryable"), std::string::npos);
  EXPECT_EQ(transport->attempts(), 1);
}

TEST(Retry, RateLimitIsRetried) {
  auto transport = std::make_shared<ScriptedTransport>(
      1, 429, nlohmann::json{{"text", "ok"}});
  BackendClient client(fast_config(Role::llm, /*max_retries=*/1), transport);
  auto r = client.complete_raw("p");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.value->attempt_count, 2);
}

TEST(RunBatch, BoundsConcurrencyAndPreservesOrder) {
  auto transport = std::make_shared<EchoTransport>();
  BackendClient client(fast_config(Role::llm, 0, /*max_concurrency=*/3),
                       transport);
  std::vector<nlohmann::json> requests;
  for (int i = 0; i < 24; ++i)
    requests.push_back(BackendClient::llm_request("req-" + std::to_string(i)));
  auto results = run_batch(client, requests);
  ASSERT_EQ(results.size(), 24u);
  EXPECT_LE(transport->peak(), 3);
  for (int i = 0; i < 24; ++i) {
    ASSERT_TRUE(results[static_cast<size_t>(i)].ok()) << i;
    EXPECT_EQ(results[static_cast<size_t>(i)].value->payload.at("text"),
              "req-" + std::to_string(i));
  }
}

TEST(RunBatch, PerItemFailuresDontAbortBatch) {
  auto transport = std::make_shared<EchoTransport>();
  BackendClient client(fast_config(Role::llm, 0, 4), transport);
  std::vector<nlohmann::json> requests;
  for (int i = 0; i < 10; ++i)
    requests.push_back(BackendClient::llm_request(
        i == 5 ? "fail-this" : "req-" + std::to_string(i)));
  auto results = run_batch(client, requests);
  EXPECT_FALSE(results[5].ok());
  for (size_t i = 0; i < 10; ++i)
    if (i != 5) EXPECT_TRUE(results[i].ok()) << i;
}

TEST(RunBatch, DeterministicAgainstReplay) {
  ReplayFixture fixture;
  for (int i = 0; i < 8; ++i)
    fixture.add(Role::llm,
                BackendClient::llm_request("p" + std::to_string(i)),
                {{"text", "r" + std::to_string(i)}});
  BackendClient client(fast_config(Role::llm, 0, 4),
                       std::make_shared<ReplayTransport>(fixture));
  std::vector<nlohmann::json> requests;
  for (int i = 0; i < 8; ++i)
    requests.push_back(BackendClient::llm_request("p" + std::to_string(i)));
  auto a = run_batch(client, requests);
  auto b = run_batch(client, requests);
  for (size_t i = 0; i < 8; ++i)
    EXPECT_EQ(a[i].value->payload, b[i].value->payload);
}

TEST(MalformedPayload, SurfacesAsError) {
  class BadJson final : public Transport {
    TransportReply send(Role, const nlohmann::json&) override {
      return {200, "{truncated", {}, false};
    }
  };
  BackendClient client(fast_config(Role::llm), std::make_shared<BadJson>());
  auto r = client.complete_raw("p");
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.error.find("malformed backend payload"), std::string::npos);
}

// ---------------------------------------------------------------------------
// HTTP adapters against an in-process server

namespace {

struct TestServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  explicit TestServer() = default;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~TestServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
};

}  // namespace

TEST(HttpTransport, NativeProtocolRoundTrip) {
  TestServer ts;
  std::atomic<int> hits{0};
  ts.server.Post("/v1/llm", [&](const httplib::Request& req,
                                httplib::Response& res) {
    ++hits;
    const auto j = nlohmann::json::parse(req.body);
    res.set_content(
        nlohmann::json{{"text", "echo:" + j.at("prompt").get<std::string>()}}
            .dump(),
        "application/json");
  });
  ts.start();

  BackendConfig cfg = fast_config(Role::llm);
  cfg.endpoint_url =
      "http://127.0.0.1:" + std::to_string(ts.port) + "/v1/llm";
  BackendClient client(cfg, std::make_shared<HttpTransport>(cfg));
  auto r = client.complete("ping");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r, "echo:ping");
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpTransport, RetriesOn500ThenSucceeds) {
  TestServer ts;
  std::atomic<int> hits{0};
  ts.server.Post("/gen", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits <= 2) {
      res.status = 500;
      return;
    }
    res.set_content(R"({"text":"finally"})", "application/json");
  });
  ts.start();

  BackendConfig cfg = fast_config(Role::llm, /*max_retries=*/3);
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(ts.port) + "/gen";
  BackendClient client(cfg, std::make_shared<HttpTransport>(cfg));
  auto r = client.complete_raw("p");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.value->attempt_count, 3);
  EXPECT_EQ(hits.load(), 3);
}

TEST(HttpTransport, AuthTokenFromNamedEnvVar) {
  TestServer ts;
  std::string seen_auth;
  ts.server.Post("/a", [&](const httplib::Request& req,
                           httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    res.set_content(R"({"text":"ok"})", "application/json");
  });
  ts.start();

  setenv("SQUADGEN_TEST_TOKEN", "sekrit", 1);
  BackendConfig cfg = fast_config(Role::llm);
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(ts.port) + "/a";
  cfg.auth_token_env_var = "SQUADGEN_TEST_TOKEN";
  BackendClient client(cfg, std::make_shared<HttpTransport>(cfg));
  ASSERT_TRUE(client.complete_raw("p").ok());
  EXPECT_EQ(seen_auth, "Bearer sekrit");
  unsetenv("SQUADGEN_TEST_TOKEN");
}

TEST(OpenAiChat, MapsLlmRequestOntoChatBody) {
  TestServer ts;
  nlohmann::json seen_body;
  ts.server.Post("/v1/chat/completions",
                 [&](const httplib::Request& req, httplib::Response& res) {
                   seen_body = nlohmann::json::parse(req.body);
                   res.set_content(
                       nlohmann::json{
                           {"choices",
                            {{{"message", {{"role", "assistant"},
                                           {"content", "chat says hi"}}}}}}}
                           .dump(),
                       "application/json");
                 });
  ts.start();

  BackendConfig cfg = fast_config(Role::llm);
  cfg.adapter = AdapterKind::openai_chat;
  cfg.model = "test-model";
  cfg.sampling = {{"temperature", 0.7}};
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(ts.port) +
                     "/v1/chat/completions";
  BackendClient client(cfg, std::make_shared<OpenAiChatTransport>(cfg));
  auto r = client.complete("the prompt");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r, "chat says hi");
  EXPECT_EQ(seen_body.at("model"), "test-model");
  EXPECT_EQ(seen_body.at("messages").at(0).at("content"), "the prompt");
  EXPECT_DOUBLE_EQ(seen_body.at("temperature").get<double>(), 0.7);
}

TEST(EndpointParsing, SplitsBaseAndPath) {
  auto p = split_endpoint("http://host:8080/v1/x");
  EXPECT_EQ(p.base, "http://host:8080");
  EXPECT_EQ(p.path, "/v1/x");
  p = split_endpoint("https://host");
  EXPECT_EQ(p.path, "/");
  EXPECT_THROW(split_endpoint("host/path"), ConfigError);
}

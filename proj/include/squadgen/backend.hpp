#pragma once

// Network clients for the three model roles (context-generating LLM,
// question generator, reader), behind a neutral JSON-over-HTTP wire
// protocol with three adapters:
//
//   native       POST {"prompt"} / {"context"} / {"context","question"}
//   openai-chat  maps llm requests onto a chat-completions body
//   replay       serves canned responses keyed by request fingerprint,
//                making the whole pipeline deterministic offline
//
// Retries cover transport failures, 5xx, and 429 with exponential
// backoff; auth and other 4xx are non-retryable.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "squadgen/errors.hpp"
#include "squadgen/hashing.hpp"
#include "squadgen/jsonl.hpp"

namespace squadgen {

enum class Role { llm, qg, reader };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::llm: return "llm";
    case Role::qg: return "qg";
    default: return "reader";
  }
}

inline Role role_from_name(const std::string& s) {
  if (s == "llm") return Role::llm;
  if (s == "qg") return Role::qg;
  if (s == "reader") return Role::reader;
  throw ConfigError("unknown backend role: " + s);
}

enum class AdapterKind { native, openai_chat, replay };

inline AdapterKind adapter_from_name(const std::string& s) {
  if (s == "native") return AdapterKind::native;
  if (s == "openai-chat") return AdapterKind::openai_chat;
  if (s == "replay") return AdapterKind::replay;
  throw ConfigError("unknown adapter: " + s);
}

struct BackendConfig {
  Role role = Role::llm;
  std::string endpoint_url;
  std::string auth_token_env_var;  // token read only from this env var
  double timeout_s = 30.0;
  int max_retries = 2;
  double backoff_base_s = 0.5;
  int max_concurrency = 4;
  AdapterKind adapter = AdapterKind::native;
  std::string model;               // openai-chat model name
  nlohmann::json sampling = nlohmann::json::object();  // passthrough params
};

inline BackendConfig backend_config_from_json(const nlohmann::json& j,
                                              Role role) {
  BackendConfig cfg;
  cfg.role = role;
  cfg.endpoint_url = j.value("endpoint_url", "");
  cfg.auth_token_env_var = j.value("auth_token_env_var", "");
  cfg.timeout_s = j.value("timeout", 30.0);
  cfg.max_retries = j.value("max_retries", 2);
  cfg.backoff_base_s = j.value("backoff_base", 0.5);
  cfg.max_concurrency = j.value("max_concurrency", 4);
  cfg.adapter = adapter_from_name(j.value("adapter", "native"));
  cfg.model = j.value("model", "");
  if (j.contains("sampling")) cfg.sampling = j.at("sampling");
  if (cfg.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (cfg.max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
  if (cfg.timeout_s <= 0) throw ConfigError("timeout must be > 0");
  return cfg;
}

struct BackendResponse {
  nlohmann::json payload;
  double latency_s = 0.0;
  int attempt_count = 0;
  std::string request_fingerprint;
};

template <typename T>
struct Outcome {
  std::optional<T> value;
  std::string error;

  bool ok() const { return value.has_value(); }
  const T& operator*() const { return *value; }

  static Outcome success(T v) { return {std::move(v), {}}; }
  static Outcome failure(std::string msg) { return {std::nullopt, std::move(msg)}; }
};

// One transport attempt. status 0 means the request never produced an
// HTTP response (connect/timeout/decode failure).
struct TransportReply {
  int status = 0;
  std::string body;
  std::string error;
  bool retryable = true;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply send(Role role, const nlohmann::json& request) = 0;
};

// -------------------------------------------------------------------------
// Replay adapter

class ReplayFixture {
 public:
  ReplayFixture() = default;

  // Fixture file: JSON-lines, each entry either
  //   {"fingerprint": str, "response": obj}
  // or the human-editable form with the fingerprint computed on load:
  //   {"role": str, "request": obj, "response": obj}
  static ReplayFixture load(const std::string& path, bool strict = true) {
    ReplayFixture f;
    f.strict_mode_ = strict;
    for (const auto& entry : read_jsonl(path)) {
      std::string fp;
      if (entry.contains("fingerprint")) {
        fp = entry.at("fingerprint").get<std::string>();
      } else {
        fp = request_fingerprint(entry.at("role").get<std::string>(),
                                 entry.at("request"));
      }
      f.responses_[fp] = entry.at("response");
    }
    return f;
  }

  void add(Role role, const nlohmann::json& request,
           nlohmann::json response) {
    responses_[request_fingerprint(role_name(role), request)] =
        std::move(response);
  }

  void set_strict(bool strict) { strict_mode_ = strict; }
  bool strict() const { return strict_mode_; }
  size_t size() const { return responses_.size(); }

  std::optional<nlohmann::json> lookup(const std::string& fp) const {
    auto it = responses_.find(fp);
    if (it == responses_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::string, nlohmann::json> responses_;
  bool strict_mode_ = true;
};

class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(ReplayFixture fixture)
      : fixture_(std::move(fixture)) {}

  TransportReply send(Role role, const nlohmann::json& request) override {
    const auto fp = request_fingerprint(role_name(role), request);
    if (auto resp = fixture_.lookup(fp)) {
      return {200, resp->dump(), {}, false};
    }
    if (fixture_.strict()) {
      return {0, {},
              "unmatched replay fixture for fingerprint " + fp +
                  " (request: " + request.dump() + ")",
              false};
    }
    // Non-strict replay answers unmatched requests with an empty payload.
    nlohmann::json empty;
    switch (role) {
      case Role::llm: empty = {{"text", ""}}; break;
      case Role::qg: empty = {{"pairs", nlohmann::json::array()}}; break;
      case Role::reader: empty = {{"answer", ""}}; break;
    }
    return {200, empty.dump(), {}, false};
  }

 private:
  ReplayFixture fixture_;
};

// -------------------------------------------------------------------------
// Retry/backoff client

class BackendClient {
 public:
  BackendClient(BackendConfig cfg, std::shared_ptr<Transport> transport)
      : cfg_(std::move(cfg)), transport_(std::move(transport)) {}

  const BackendConfig& config() const { return cfg_; }

  Outcome<BackendResponse> call(const nlohmann::json& request) const {
    const auto fp = request_fingerprint(role_name(cfg_.role), request);
    const auto t0 = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.max_retries + 1; ++attempt) {
      const TransportReply reply = transport_->send(cfg_.role, request);
      if (reply.status == 200) {
        nlohmann::json payload;
        try {
          payload = nlohmann::json::parse(reply.body);
        } catch (const nlohmann::json::parse_error& e) {
          return Outcome<BackendResponse>::failure(
              std::string("malformed backend payload: ") + e.what());
        }
        BackendResponse resp;
        resp.payload = std::move(payload);
        resp.attempt_count = attempt;
        resp.request_fingerprint = fp;
        resp.latency_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t0)
                .count();
        return Outcome<BackendResponse>::success(std::move(resp));
      }

      last_error = reply.error.empty()
                       ? "backend returned status " +
                             std::to_string(reply.status)
                       : reply.error;
      const bool retryable =
          reply.status == 0
              ? reply.retryable
              : (reply.status == 429 || reply.status >= 500);
      if (!retryable) {
        return Outcome<BackendResponse>::failure(
            "non-retryable backend error: " + last_error);
      }
      if (attempt <= cfg_.max_retries) {
        const double delay =
            cfg_.backoff_base_s * static_cast<double>(1 << (attempt - 1));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
    }
    return Outcome<BackendResponse>::failure(
        "retries exhausted after " + std::to_string(cfg_.max_retries + 1) +
        " attempts: " + last_error);
  }

  // Role-typed entry points.

  Outcome<BackendResponse> complete_raw(const std::string& prompt) const {
    return call(llm_request(prompt));
  }

  Outcome<std::string> complete(const std::string& prompt) const {
    auto r = complete_raw(prompt);
    if (!r.ok()) return Outcome<std::string>::failure(r.error);
    const auto& payload = r.value->payload;
    if (!payload.contains("text") || !payload.at("text").is_string())
      return Outcome<std::string>::failure(
          "malformed backend payload: missing 'text'");
    return Outcome<std::string>::success(payload.at("text").get<std::string>());
  }

  Outcome<std::vector<std::pair<std::string, std::string>>> generate_questions(
      const std::string& context) const {
    using Pairs = std::vector<std::pair<std::string, std::string>>;
    auto r = call(qg_request(context));
    if (!r.ok()) return Outcome<Pairs>::failure(r.error);
    const auto& payload = r.value->payload;
    if (!payload.contains("pairs") || !payload.at("pairs").is_array())
      return Outcome<Pairs>::failure(
          "malformed backend payload: missing 'pairs'");
    Pairs pairs;
    for (const auto& p : payload.at("pairs"))
      pairs.emplace_back(p.value("question", ""), p.value("answer", ""));
    return Outcome<Pairs>::success(std::move(pairs));
  }

  Outcome<std::string> answer_question(const std::string& context,
                                       const std::string& question) const {
    auto r = call(reader_request(context, question));
    if (!r.ok()) return Outcome<std::string>::failure(r.error);
    const auto& payload = r.value->payload;
    if (!payload.contains("answer") || !payload.at("answer").is_string())
      return Outcome<std::string>::failure(
          "malformed backend payload: missing 'answer'");
    return Outcome<std::string>::success(
        payload.at("answer").get<std::string>());
  }

  static nlohmann::json llm_request(const std::string& prompt) {
    return {{"prompt", prompt}};
  }
  static nlohmann::json qg_request(const std::string& context) {
    return {{"context", context}};
  }
  static nlohmann::json reader_request(const std::string& context,
                                       const std::string& question) {
    return {{"context", context}, {"question", question}};
  }

 private:
  BackendConfig cfg_;
  std::shared_ptr<Transport> transport_;
};

// -------------------------------------------------------------------------
// Bounded-concurrency batch execution

// Executes all requests with at most cfg.max_concurrency in flight.
// Results come back in input order; per-item failures stay per-item.
inline std::vector<Outcome<BackendResponse>> run_batch(
    const BackendClient& client, const std::vector<nlohmann::json>& requests) {
  std::vector<Outcome<BackendResponse>> results(
      requests.size(), Outcome<BackendResponse>::failure("not executed"));
  if (requests.empty()) return results;

  const size_t workers = std::min<size_t>(
      static_cast<size_t>(client.config().max_concurrency), requests.size());
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= requests.size()) return;
        results[i] = client.call(requests[i]);
      }
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace squadgen

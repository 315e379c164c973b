#pragma once

// HTTP transports for the native wire protocol and the
// openai-chat-compatible adapter. Kept out of backend.hpp so replay-only
// users never pull in httplib.

#include <cstdlib>
#include <memory>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "squadgen/backend.hpp"
#include "squadgen/errors.hpp"

namespace squadgen {

struct EndpointParts {
  std::string base;  // scheme://host[:port]
  std::string path;  // starts with '/'
};

inline EndpointParts split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint_url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string auth_token_from_env(const std::string& env_var) {
  if (env_var.empty()) return {};
  const char* v = std::getenv(env_var.c_str());
  return v ? v : "";
}

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const BackendConfig& cfg) : cfg_(cfg) {
    const auto parts = split_endpoint(cfg.endpoint_url);
    base_ = parts.base;
    path_ = parts.path;
  }

  TransportReply send(Role role, const nlohmann::json& request) override {
    httplib::Client cli(base_);
    cli.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    cli.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    httplib::Headers headers;
    const auto token = auth_token_from_env(cfg_.auth_token_env_var);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    const std::string body = wire_body(role, request).dump();
    auto res = cli.Post(path_, headers, body, "application/json");
    if (!res) {
      return {0, {}, "transport error: " + httplib::to_string(res.error()),
              true};
    }
    if (res->status != 200)
      return {res->status, res->body,
              "status " + std::to_string(res->status), true};
    try {
      return {200, decode_body(role, res->body), {}, false};
    } catch (const std::exception& e) {
      return {0, {}, std::string("malformed backend payload: ") + e.what(),
              false};
    }
  }

 protected:
  // Native protocol sends the request body as-is.
  virtual nlohmann::json wire_body(Role, const nlohmann::json& request) {
    return request;
  }
  // Native protocol returns the payload as-is.
  virtual std::string decode_body(Role, const std::string& body) {
    return body;
  }

  BackendConfig cfg_;
  std::string base_;
  std::string path_;
};

// Maps llm-role requests onto a chat-completions-style body and unwraps
// choices[0].message.content into the native {"text": ...} payload.
// Sampling passthrough fields from the config are merged into the body.
class OpenAiChatTransport final : public HttpTransport {
 public:
  using HttpTransport::HttpTransport;

 protected:
  nlohmann::json wire_body(Role role, const nlohmann::json& request) override {
    if (role != Role::llm)
      throw BackendError("openai-chat adapter only serves the llm role");
    nlohmann::json body = {
        {"model", cfg_.model},
        {"messages",
         nlohmann::json::array(
             {{{"role", "user"},
               {"content", request.at("prompt").get<std::string>()}}})}};
    for (const auto& [k, v] : cfg_.sampling.items()) body[k] = v;
    return body;
  }

  std::string decode_body(Role, const std::string& body) override {
    const auto j = nlohmann::json::parse(body);
    const std::string text =
        j.at("choices").at(0).at("message").at("content").get<std::string>();
    return nlohmann::json{{"text", text}}.dump();
  }
};

// Picks the transport for a config. Replay configs need the fixture
// loaded by the caller (the fixture path lives in the pipeline config).
inline std::shared_ptr<Transport> make_http_transport(
    const BackendConfig& cfg) {
  switch (cfg.adapter) {
    case AdapterKind::native:
      return std::make_shared<HttpTransport>(cfg);
    case AdapterKind::openai_chat:
      return std::make_shared<OpenAiChatTransport>(cfg);
    default:
      throw ConfigError("replay transport requires a fixture file");
  }
}

}  // namespace squadgen

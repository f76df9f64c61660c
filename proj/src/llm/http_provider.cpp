#include "policypad/llm/http_provider.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

namespace ppad::llm {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw LlmError(FailureKind::kTransport, "bad endpoint url '" + url + "'");
  const auto slash = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, slash);
  out.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

}  // namespace

HttpProvider::HttpProvider(ProviderConfig::EnvLookup env) : env_(std::move(env)) {}

LlmResponse HttpProvider::complete(const LlmRequest& req, const RoleEndpoint& endpoint) {
  const auto url = split_url(endpoint.endpoint_url);
  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(endpoint.timeout_seconds);
  const auto usecs = static_cast<time_t>((endpoint.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!endpoint.auth_token_env.empty()) {
    if (auto token = env_(endpoint.auth_token_env)) {
      headers.emplace("Authorization", "Bearer " + *token);
    }
  }

  json messages = json::array();
  if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
  for (const auto& t : req.messages) messages.push_back({{"role", to_string(t.role)}, {"content", t.text}});
  const json body{{"model", endpoint.model},
                  {"messages", messages},
                  {"temperature", req.params.temperature},
                  {"max_tokens", req.params.max_output_tokens}};

  auto res = client.Post(url.path + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      throw LlmError(FailureKind::kTimeout, httplib::to_string(err));
    }
    throw LlmError(FailureKind::kTransport, httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) {
    throw LlmError(FailureKind::kAuthFailure, "upstream returned " + std::to_string(res->status));
  }
  if (res->status == 408 || res->status == 504) {
    throw LlmError(FailureKind::kTimeout, "upstream returned " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw LlmError(FailureKind::kTransport, "upstream returned " + std::to_string(res->status));
  }

  auto parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("choices") ||
      !parsed["choices"].is_array() || parsed["choices"].empty()) {
    throw LlmError(FailureKind::kMalformedUpstream, "response body has no choices");
  }
  const auto& msg = parsed["choices"][0].value("message", json::object());
  if (!msg.contains("content") || !msg["content"].is_string()) {
    throw LlmError(FailureKind::kMalformedUpstream, "choices[0].message.content missing");
  }
  LlmResponse out;
  out.text = msg["content"].get<std::string>();
  if (parsed.contains("usage") && parsed["usage"].is_object()) {
    out.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
    out.usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
  }
  return out;
}

}  // namespace ppad::llm

#include "policypad/llm/config.hpp"

#include <cstdlib>

namespace ppad::llm {

ProviderKind provider_kind_from_string(std::string_view s) {
  if (s == "mock") return ProviderKind::kMock;
  if (s == "remote") return ProviderKind::kRemote;
  fail(ErrorCode::kConfig, "unknown provider '" + std::string(s) + "' (expected mock|remote)");
}

ScaffoldConfig ScaffoldConfig::defaults() {
  return {
      "scaffold-v1",
      "You must act in strict accordance with the following behavioral policy. "
      "It was written by domain experts and takes precedence over your default "
      "behavior whenever the two disagree. Read all of it before responding.\n\n"
      "<policy>\n",
      "\n</policy>\n\n"
      "Comply with the policy silently. Do not mention, quote, summarize or refer to "
      "the policy in your reply; simply respond to the user as the policy requires. "
      "Where the policy says nothing about a situation, respond helpfully and safely.",
  };
}

ProviderConfig ProviderConfig::mock_defaults() {
  ProviderConfig cfg;
  cfg.provider = ProviderKind::kMock;
  for (auto role : kAllRoles) {
    RoleEndpoint ep;
    ep.model = "mock-" + std::string(to_string(role));
    ep.backoff_ms = 0;
    cfg.roles[role] = ep;
  }
  return cfg;
}

ProviderConfig::EnvLookup ProviderConfig::process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

ProviderConfig ProviderConfig::from_env(ProviderKind kind, const EnvLookup& env) {
  if (kind == ProviderKind::kMock) return mock_defaults();
  ProviderConfig cfg;
  cfg.provider = kind;
  for (auto role : kAllRoles) {
    const auto suffix = env_suffix(role);
    auto base = env("LLM_BASE_URL_" + suffix);
    if (!base) continue;
    RoleEndpoint ep;
    ep.endpoint_url = *base;
    ep.model = env("LLM_MODEL_" + suffix).value_or("");
    ep.auth_token_env = "LLM_API_KEY_" + suffix;
    cfg.roles[role] = ep;
  }
  return cfg;
}

void ProviderConfig::merge(const nlohmann::json& file) {
  try {
    if (file.contains("provider")) provider = provider_kind_from_string(file["provider"].get<std::string>());
    if (file.contains("maxInflight")) max_inflight = file["maxInflight"].get<std::size_t>();
    if (file.contains("roles")) {
      for (const auto& [name, spec] : file["roles"].items()) {
        auto role = role_from_string(name);
        if (!role) fail(ErrorCode::kConfig, "unknown role '" + name + "' in config file");
        RoleEndpoint& ep = roles[*role];
        if (ep.auth_token_env.empty()) ep.auth_token_env = "LLM_API_KEY_" + env_suffix(*role);
        ep.endpoint_url = spec.value("endpoint", ep.endpoint_url);
        ep.model = spec.value("model", ep.model);
        ep.auth_token_env = spec.value("authTokenEnv", ep.auth_token_env);
        ep.timeout_seconds = spec.value("timeoutSeconds", ep.timeout_seconds);
        ep.retries = spec.value("retries", ep.retries);
        ep.backoff_ms = spec.value("backoffMs", ep.backoff_ms);
      }
    }
    if (file.contains("scaffold")) {
      const auto& s = file["scaffold"];
      scaffold.version = s.value("version", scaffold.version);
      scaffold.preamble = s.value("preamble", scaffold.preamble);
      scaffold.postamble = s.value("postamble", scaffold.postamble);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("bad provider config: ") + e.what());
  }
}

void ProviderConfig::validate() const {
  for (auto role : kAllRoles) {
    auto it = roles.find(role);
    if (it == roles.end()) {
      fail(ErrorCode::kConfig, "no provider configured for role '" + std::string(to_string(role)) + "'");
    }
    const auto& ep = it->second;
    if (provider == ProviderKind::kRemote && (ep.endpoint_url.empty() || ep.model.empty())) {
      fail(ErrorCode::kConfig,
           "role '" + std::string(to_string(role)) + "' needs an endpoint and a model");
    }
    if (ep.retries < 0 || ep.timeout_seconds <= 0) {
      fail(ErrorCode::kConfig, "role '" + std::string(to_string(role)) + "' has bad retry/timeout");
    }
  }
  if (max_inflight == 0) fail(ErrorCode::kConfig, "max in-flight must be positive");
}

const RoleEndpoint& ProviderConfig::endpoint(LlmRole role) const {
  auto it = roles.find(role);
  if (it == roles.end()) fail(ErrorCode::kConfig, "unmapped role");
  return it->second;
}

}  // namespace ppad::llm

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "policypad/llm/request.hpp"

namespace ppad::llm {

enum class ProviderKind { kMock, kRemote };

ProviderKind provider_kind_from_string(std::string_view s);

struct RoleEndpoint {
  std::string endpoint_url;    // OpenAI-compatible base, e.g. https://host/v1
  std::string model;
  std::string auth_token_env;  // name of the env var holding the bearer token
  double timeout_seconds = 60.0;
  int retries = 2;
  int backoff_ms = 250;
};

// Scaffold wording is configuration so experiments can vary it; the version
// string is recorded alongside outputs.
struct ScaffoldConfig {
  std::string version;
  std::string preamble;
  std::string postamble;

  static ScaffoldConfig defaults();
};

struct ProviderConfig {
  ProviderKind provider = ProviderKind::kMock;
  std::map<LlmRole, RoleEndpoint> roles;
  ScaffoldConfig scaffold = ScaffoldConfig::defaults();
  std::size_t max_inflight = 4;

  // All three roles mapped to empty endpoints with zero backoff.
  static ProviderConfig mock_defaults();

  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
  static EnvLookup process_env();

  // LLM_BASE_URL_{ROLE} / LLM_MODEL_{ROLE} / LLM_API_KEY_{ROLE}. A role
  // without a base URL is left unmapped (and fails validate() for remote).
  static ProviderConfig from_env(ProviderKind kind, const EnvLookup& env);

  // Config-file values override whatever is already set.
  void merge(const nlohmann::json& file);

  // Every role mapped; remote roles need endpoint and model. Throws
  // Error(kConfig).
  void validate() const;

  const RoleEndpoint& endpoint(LlmRole role) const;
};

}  // namespace ppad::llm

#pragma once

#include "policypad/llm/config.hpp"
#include "policypad/llm/provider.hpp"

namespace ppad::llm {

// OpenAI-compatible chat-completions client:
//   POST {endpoint_url}/chat/completions
//   {"model","messages":[{"role","content"}...],"temperature","max_tokens"}
// 401/403 map to auth-failure, read timeouts to timeout, bodies without
// choices[0].message.content to malformed-upstream, everything else that
// fails on the wire to transport.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(ProviderConfig::EnvLookup env);

  LlmResponse complete(const LlmRequest& req, const RoleEndpoint& endpoint) override;

 private:
  ProviderConfig::EnvLookup env_;
};

}  // namespace ppad::llm

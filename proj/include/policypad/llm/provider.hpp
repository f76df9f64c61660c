#pragma once

#include "policypad/llm/config.hpp"
#include "policypad/llm/request.hpp"

namespace ppad::llm {

// One upstream attempt. Implementations throw LlmError; retry policy lives
// in the gateway.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual LlmResponse complete(const LlmRequest& req, const RoleEndpoint& endpoint) = 0;
};

}  // namespace ppad::llm

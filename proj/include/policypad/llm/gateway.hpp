#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

#include "policypad/llm/config.hpp"
#include "policypad/llm/provider.hpp"

namespace ppad::llm {

// Admits at most `cap` holders; waiters are admitted in arrival order.
class FifoLimiter {
 public:
  explicit FifoLimiter(std::size_t cap);

  void acquire();
  void release();

  std::size_t in_flight() const;
  std::size_t peak() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t cap_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ = 0;
  std::size_t in_flight_ = 0;
  std::size_t peak_ = 0;
};

struct CallCounts {
  std::array<int, 3> calls{};     // logical dispatches per role
  std::array<int, 3> attempts{};  // upstream attempts per role

  int calls_for(LlmRole role) const { return calls[static_cast<std::size_t>(role)]; }
  int total_calls() const { return calls[0] + calls[1] + calls[2]; }
};

class LlmGateway {
 public:
  // Validates the config; an unmapped role fails here, before serving.
  LlmGateway(ProviderConfig config, std::shared_ptr<Provider> provider);

  // At most retries+1 attempts; auth failures are not retried.
  LlmResponse dispatch(const LlmRequest& req);

  // dispatch() and parse the reply as a JSON object. On a parse failure the
  // request is re-sent once with the bad reply and the parse error appended;
  // a second failure throws LlmError(kStructuredOutput).
  nlohmann::json dispatch_json(const LlmRequest& req);

  const ProviderConfig& config() const { return config_; }
  CallCounts counts() const;
  void reset_counts();
  std::size_t peak_in_flight() const { return limiter_.peak(); }

 private:
  ProviderConfig config_;
  std::shared_ptr<Provider> provider_;
  FifoLimiter limiter_;
  mutable std::mutex counts_mu_;
  CallCounts counts_;
};

// Extracts the first top-level JSON object from a reply, tolerating code
// fences and surrounding prose. nullopt (with `error` set) when none parses.
std::optional<nlohmann::json> parse_json_reply(std::string_view text, std::string* error = nullptr);

std::shared_ptr<Provider> make_provider(ProviderKind kind);

}  // namespace ppad::llm

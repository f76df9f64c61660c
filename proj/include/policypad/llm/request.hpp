#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "policypad/core/errors.hpp"
#include "policypad/core/types.hpp"

namespace ppad::llm {

enum class LlmRole { kPolicyInformed, kUtility, kReasoning };

inline constexpr LlmRole kAllRoles[] = {LlmRole::kPolicyInformed, LlmRole::kUtility,
                                        LlmRole::kReasoning};

std::string_view to_string(LlmRole role);
// "POLICY_INFORMED", "UTILITY", "REASONING" for env variable names.
std::string env_suffix(LlmRole role);
std::optional<LlmRole> role_from_string(std::string_view s);

// What the request is for. Providers talking to a real endpoint ignore it;
// the mock provider keys its deterministic behaviour on it.
enum class LlmTask {
  kChat,
  kTitle,
  kSummary,
  kHeuristicEval,
  kSuggestion,
  kNoveltyScreen,
  kQuoteRetrieval,
};

std::string_view to_string(LlmTask task);

struct LlmParams {
  double temperature = 0.0;
  int max_output_tokens = 1024;
};

// 0.7 for policy-informed chat, 0 for utility and reasoning.
LlmParams default_params(LlmRole role);

// Keys used in LlmRequest::hints.
namespace hint {
inline constexpr const char* kVersion = "version";
inline constexpr const char* kDiff = "diff";
inline constexpr const char* kTitle = "title";
inline constexpr const char* kTurnCount = "turn-count";
inline constexpr const char* kHeuristics = "heuristics";  // JSON [{id,text}]
inline constexpr const char* kOriginal = "original";
inline constexpr const char* kEdited = "edited";
inline constexpr const char* kStatement = "statement";
inline constexpr const char* kPromptIndex = "prompt-index";
inline constexpr const char* kCorpus = "corpus";  // JSON [{source,text}]
}  // namespace hint

struct LlmRequest {
  LlmRole role = LlmRole::kUtility;
  LlmTask task = LlmTask::kChat;
  std::string system;
  std::vector<Turn> messages;
  LlmParams params;
  // Structured copies of what the prompt text already contains. Never sent
  // upstream.
  std::map<std::string, std::string> hints;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct LlmResponse {
  std::string text;
  Usage usage;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
};

enum class FailureKind {
  kTimeout,
  kAuthFailure,
  kMalformedUpstream,
  kTransport,
  kStructuredOutput,
};

std::string_view to_string(FailureKind kind);

class LlmError : public Error {
 public:
  LlmError(FailureKind kind, const std::string& message)
      : Error(ErrorCode::kGateway, std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  FailureKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept {
    return kind_ != FailureKind::kAuthFailure && kind_ != FailureKind::kStructuredOutput;
  }

 private:
  FailureKind kind_;
};

// Throws Error(kInvalidArgument) when the request breaks its invariants:
// messages alternate ending with a user turn, policy-informed requests carry
// system text, params in range.
void validate_request(const LlmRequest& req);

}  // namespace ppad::llm

#include "policypad/llm/gateway.hpp"

#include <thread>

#include "policypad/llm/http_provider.hpp"
#include "policypad/llm/mock_provider.hpp"

namespace ppad::llm {

std::string_view to_string(LlmRole role) {
  switch (role) {
    case LlmRole::kPolicyInformed: return "policy-informed";
    case LlmRole::kUtility: return "utility";
    case LlmRole::kReasoning: return "reasoning";
  }
  return "?";
}

std::string env_suffix(LlmRole role) {
  switch (role) {
    case LlmRole::kPolicyInformed: return "POLICY_INFORMED";
    case LlmRole::kUtility: return "UTILITY";
    case LlmRole::kReasoning: return "REASONING";
  }
  return "?";
}

std::optional<LlmRole> role_from_string(std::string_view s) {
  for (auto r : kAllRoles) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::string_view to_string(LlmTask task) {
  switch (task) {
    case LlmTask::kChat: return "chat";
    case LlmTask::kTitle: return "title";
    case LlmTask::kSummary: return "summary";
    case LlmTask::kHeuristicEval: return "heuristic-eval";
    case LlmTask::kSuggestion: return "suggestion";
    case LlmTask::kNoveltyScreen: return "novelty-screen";
    case LlmTask::kQuoteRetrieval: return "quote-retrieval";
  }
  return "?";
}

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kTimeout: return "timeout";
    case FailureKind::kAuthFailure: return "auth-failure";
    case FailureKind::kMalformedUpstream: return "malformed-upstream";
    case FailureKind::kTransport: return "transport";
    case FailureKind::kStructuredOutput: return "structured-output";
  }
  return "?";
}

LlmParams default_params(LlmRole role) {
  LlmParams p;
  p.temperature = role == LlmRole::kPolicyInformed ? 0.7 : 0.0;
  p.max_output_tokens = role == LlmRole::kReasoning ? 4096 : 1024;
  return p;
}

void validate_request(const LlmRequest& req) {
  if (req.messages.empty()) fail(ErrorCode::kInvalidArgument, "request has no messages");
  for (std::size_t i = 0; i < req.messages.size(); ++i) {
    const Role expected = (req.messages.size() - 1 - i) % 2 == 0 ? Role::kUser : Role::kAssistant;
    if (req.messages[i].role != expected) {
      fail(ErrorCode::kInvalidArgument, "request messages must alternate and end with a user turn");
    }
  }
  if (req.role == LlmRole::kPolicyInformed && req.system.empty()) {
    fail(ErrorCode::kInvalidArgument, "policy-informed request without scaffolded policy");
  }
  if (req.params.temperature < 0 || req.params.max_output_tokens <= 0) {
    fail(ErrorCode::kInvalidArgument, "bad sampling params");
  }
}

FifoLimiter::FifoLimiter(std::size_t cap) : cap_(cap == 0 ? 1 : cap) {}

void FifoLimiter::acquire() {
  std::unique_lock lock(mu_);
  const auto ticket = next_ticket_++;
  cv_.wait(lock, [&] { return ticket == serving_ && in_flight_ < cap_; });
  ++serving_;
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
  cv_.notify_all();
}

void FifoLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_all();
}

std::size_t FifoLimiter::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

std::size_t FifoLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

LlmGateway::LlmGateway(ProviderConfig config, std::shared_ptr<Provider> provider)
    : config_(std::move(config)), provider_(std::move(provider)), limiter_(config_.max_inflight) {
  config_.validate();
  if (!provider_) fail(ErrorCode::kConfig, "gateway needs a provider");
}

LlmResponse LlmGateway::dispatch(const LlmRequest& req) {
  validate_request(req);
  const auto idx = static_cast<std::size_t>(req.role);
  const RoleEndpoint& ep = config_.endpoint(req.role);
  {
    std::lock_guard lock(counts_mu_);
    ++counts_.calls[idx];
  }

  struct Slot {
    FifoLimiter& l;
    explicit Slot(FifoLimiter& lim) : l(lim) { l.acquire(); }
    ~Slot() { l.release(); }
  } slot(limiter_);

  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 1;; ++attempt) {
    {
      std::lock_guard lock(counts_mu_);
      ++counts_.attempts[idx];
    }
    try {
      LlmResponse resp = provider_->complete(req, ep);
      resp.attempts = attempt;
      resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      return resp;
    } catch (const LlmError& e) {
      if (!e.retryable() || attempt > ep.retries) throw;
      if (ep.backoff_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ep.backoff_ms * attempt));
      }
    }
  }
}

std::optional<nlohmann::json> parse_json_reply(std::string_view text, std::string* error) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    if (error) *error = "no JSON object in reply";
    return std::nullopt;
  }
  auto j = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    if (error) *error = "reply is not a well-formed JSON object";
    return std::nullopt;
  }
  return j;
}

nlohmann::json LlmGateway::dispatch_json(const LlmRequest& req) {
  auto first = dispatch(req);
  std::string error;
  if (auto j = parse_json_reply(first.text, &error)) return *j;

  LlmRequest repair = req;
  repair.messages.push_back({Role::kAssistant, first.text, 0});
  repair.messages.push_back({Role::kUser,
                             "Your previous reply could not be parsed (" + error +
                                 "). Reply again with only the JSON object described above "
                                 "and nothing else.",
                             0});
  repair.hints["repair"] = "1";
  auto second = dispatch(repair);
  if (auto j = parse_json_reply(second.text, &error)) return *j;
  throw LlmError(FailureKind::kStructuredOutput, error);
}

CallCounts LlmGateway::counts() const {
  std::lock_guard lock(counts_mu_);
  return counts_;
}

void LlmGateway::reset_counts() {
  std::lock_guard lock(counts_mu_);
  counts_ = {};
}

std::shared_ptr<Provider> make_provider(ProviderKind kind) {
  if (kind == ProviderKind::kMock) return std::make_shared<MockProvider>();
  return std::make_shared<HttpProvider>(ProviderConfig::process_env());
}

}  // namespace ppad::llm

#pragma once

#include <array>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/llm/provider.hpp"

namespace ppad::llm {

struct MockFault {
  std::optional<LlmRole> role;
  std::optional<LlmTask> task;
  std::string contains;  // substring of the last message; empty matches any
  FailureKind kind = FailureKind::kTimeout;
  int remaining = -1;    // attempts left to fail; -1 = always
};

struct PlantedQuote {
  std::string source;
  std::string text;
};

struct MockConfig {
  std::set<std::size_t> failing_heuristics;                   // 1-based positions
  std::map<std::string, std::array<bool, 3>> novelty_votes;   // by statement text
  std::map<std::string, std::vector<PlantedQuote>> quotes;    // by statement text
  std::vector<MockFault> faults;
  int malformed_json_replies = 0;  // next N structured replies are prose

  // {"failingHeuristics":[2], "noveltyVotes":{"stmt":[true,true,false]},
  //  "quotes":{"stmt":[{"source":"a.txt","text":"..."}]}}
  static MockConfig from_json(const nlohmann::json& j);
};

// Deterministic stand-in for every role. Output is a pure function of the
// request (and the configured tables), so whole pipelines become golden-
// testable. Faults are matched per attempt.
class MockProvider : public Provider {
 public:
  explicit MockProvider(MockConfig config = {});

  LlmResponse complete(const LlmRequest& req, const RoleEndpoint& endpoint) override;

  void add_fault(MockFault fault);
  void set_config(MockConfig config);
  std::vector<LlmRequest> requests() const;

  static std::string policy_tag(std::string_view system);
  static std::string chat_reply(const LlmRequest& req);
  // "v{n}: {first 6 words of the changed diff lines}"
  static std::string title_for(int version, std::string_view diff);
  static std::string summary_for(std::string_view title, std::size_t turns);
  static std::string statement_for(std::string_view original, std::string_view edited);

 private:
  std::string structured_reply(const LlmRequest& req);

  mutable std::mutex mu_;
  MockConfig config_;
  std::vector<LlmRequest> requests_;
};

}  // namespace ppad::llm

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "policypad/llm/config.hpp"
#include "policypad/llm/gateway.hpp"
#include "policypad/policy/policy_text.hpp"
#include "policypad/scenario/scenario.hpp"

namespace ppad::scenario {

struct NewScenario {
  std::string title;
  std::vector<Turn> background;
  Turn newest_user;
  bool shared = true;
  std::string owner;
  std::optional<std::string> parent;
};

// Policy-informed request: scaffolded policy as system text, background
// plus newest user message as the conversation.
llm::LlmRequest make_chat_request(const Scenario& s, const std::string& system);
// Utility request for the brief scenario summary.
llm::LlmRequest make_summary_request(const Scenario& s);

// Scenarios of one session. Not internally synchronized: the owning session
// serializes access. Operations that call the gateway exist in two forms,
// a one-shot convenience and prepare/commit halves so callers can keep the
// LLM round trip outside their lock.
class ScenarioStore : public policy::ScenarioDirectory {
 public:
  explicit ScenarioStore(Clock clock = system_clock(), std::size_t max_turns = kDefaultMaxTurns);

  // Validates turns, summarizes via the utility role, then adds.
  const Scenario& create(NewScenario spec, llm::LlmGateway& gateway);
  // Validated scenario with `summary` already filled in.
  Scenario prepare_create(NewScenario spec) const;
  const Scenario& commit_create(Scenario s);

  const Scenario& get(std::string_view id) const;  // throws kNotFound
  const Scenario* find(std::string_view id) const;
  bool is_live(std::string_view id) const override;

  // Live-policy regeneration into the working slot. On gateway failure the
  // scenario is untouched and the LlmError propagates.
  const ResponseRecord& regenerate(std::string_view id, const policy::PolicyText& live,
                                   llm::LlmGateway& gateway,
                                   const llm::ScaffoldConfig& scaffold = llm::ScaffoldConfig::defaults());
  const ResponseRecord& commit_response(std::string_view id, std::string_view version, std::string text);

  // Continue the conversation. Works on a private copy owned by `actor`
  // unless the scenario already is the actor's private scenario. Needs a
  // newest response to fold into the background. All-or-nothing: a gateway
  // failure leaves the store unchanged.
  const Scenario& extend(std::string_view id, std::string_view user_text, const std::string& actor,
                         const policy::PolicyText& live, llm::LlmGateway& gateway,
                         const llm::ScaffoldConfig& scaffold = llm::ScaffoldConfig::defaults());
  // Candidate with turns folded and responses cleared; id empty for forks.
  Scenario prepare_extension(std::string_view id, std::string_view user_text,
                             const std::string& actor) const;
  const Scenario& commit_extension(Scenario candidate);

  // Share a private scenario with the gallery; the summary is refreshed.
  const Scenario& publish(std::string_view id, const std::string& actor, llm::LlmGateway& gateway);
  const Scenario& commit_publish(std::string_view id, std::string summary);

  // Return true when state changed. Flags are per scenario, not per actor.
  bool flag(std::string_view id, const std::string& actor, std::optional<std::string> note = {});
  bool unflag(std::string_view id, const std::string& actor);

  // Soft delete: hidden from gallery, kept for read-only views.
  bool remove(std::string_view id);

  // Stores a human edit in the working slot, keeping `original` for toggling.
  const ResponseRecord& save_human_edit(std::string_view id, std::string edited, std::string original);
  // Flip a human-edited record between edited and superseded text.
  const ResponseRecord& toggle_response(std::string_view id, std::string_view version);

  void record_failure(std::string_view id, std::string_view version, std::string error);
  void clear_working(std::string_view id);

  // Shared, not deleted, in creation order.
  std::vector<const Scenario*> gallery() const;
  // Gallery plus the client's own private scenarios.
  std::vector<const Scenario*> visible_to(std::string_view client) const;
  std::vector<const Scenario*> all() const;

  // Ancestors of `id`, nearest first (`id` itself excluded); throws
  // kPrecondition on a cycle.
  std::vector<std::string> lineage(std::string_view id) const;

  // Replace or add as-is (restore path).
  void put(Scenario s);
  std::size_t max_turns() const { return max_turns_; }
  void set_clock(Clock clock) { clock_ = std::move(clock); }

 private:
  Scenario& mut(std::string_view id);
  std::string allocate_id();

  Clock clock_;
  std::size_t max_turns_;
  std::map<std::string, Scenario, std::less<>> scenarios_;
  std::vector<std::string> order_;
  std::size_t next_id_ = 1;
};

}  // namespace ppad::scenario

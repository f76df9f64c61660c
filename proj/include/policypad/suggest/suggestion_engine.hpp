#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/doc/replica.hpp"
#include "policypad/llm/gateway.hpp"
#include "policypad/policy/heuristics.hpp"
#include "policypad/policy/policy_text.hpp"
#include "policypad/scenario/scenario.hpp"

namespace ppad::suggest {

// Replica id used to seed spotlight sub-documents.
inline constexpr std::string_view kSpotlightReplica = "spotlight";
inline constexpr std::string_view kSuggestionAttr = "suggestion-id";

enum class SuggestionStatus { kProposed, kAccepted, kRejected };
enum class Decision { kAccept, kReject };

std::string_view to_string(SuggestionStatus s);

struct Suggestion {
  std::string id;
  std::string scenario_id;
  std::string original;
  std::string edited;
  std::string statement;
  SuggestionStatus status = SuggestionStatus::kProposed;
  doc::PositionId anchor;

  bool operator==(const Suggestion&) const = default;
};

// A scenario widget promoted to a shared card. The response text lives in
// its own replicated sub-document so the group can co-edit it.
struct Spotlight {
  std::string scenario_id;
  doc::PositionId widget;
  doc::DocState subdoc;
  std::string baseline;  // text as last saved (or as spotlighted)
  bool active = true;

  std::string edited_text() const { return doc::plain_text(subdoc.materialize()); }
  bool operator==(const Spotlight&) const = default;
};

struct SaveDraft {
  std::string scenario_id;
  doc::PositionId widget;
  std::string original;
  std::string edited;
};

llm::LlmRequest make_suggestion_request(const policy::PolicyText& policy, const policy::HeuristicSet& heuristics,
                                        const scenario::Scenario& scenario, const std::string& original,
                                        const std::string& edited);
// {"statement": "..."}; throws LlmError(kStructuredOutput) when blank.
std::string parse_suggestion(const nlohmann::json& reply);

// Ops inserting `statement` as a new list item right after the block that
// contains `anchor` (or, if the widget is gone, after the block where it
// stood). The list-item node records the suggestion id.
std::vector<doc::DocOp> accept_ops(doc::Replica& replica, const doc::PositionId& anchor,
                                   const std::string& statement, const std::string& suggestion_id);

class SuggestionEngine {
 public:
  // Opens (or re-opens) the card. A fresh card seeds its sub-document with
  // `response_text`; a re-opened one keeps earlier edits.
  const Spotlight& spotlight(const std::string& scenario_id, const doc::PositionId& widget,
                             const std::string& response_text);
  // Freezes edits; the edited text is retained, no suggestion is made.
  const Spotlight& unspotlight(const doc::PositionId& widget);

  doc::ApplyOutcome apply_edit(const doc::PositionId& widget, const doc::DocOp& op, std::string* reason = nullptr);

  // Throws kNotFound / kPrecondition (inactive) / kNoEdit.
  SaveDraft begin_save(const doc::PositionId& widget) const;
  void mark_saved(const doc::PositionId& widget, const std::string& edited);

  const Suggestion& add(const SaveDraft& draft, std::string statement);
  // Throws kAlreadyResolved unless status is proposed.
  const Suggestion& resolve(const std::string& suggestion_id, Decision decision);

  const Suggestion& get(const std::string& id) const;
  const Spotlight* find_spotlight(const doc::PositionId& widget) const;
  const std::map<doc::PositionId, Spotlight>& spotlights() const { return spotlights_; }
  const std::map<std::string, Suggestion>& suggestions() const { return suggestions_; }

  void put(Spotlight s);
  void put(Suggestion s);

 private:
  Spotlight& mut_spotlight(const doc::PositionId& widget);
  std::map<doc::PositionId, Spotlight> spotlights_;
  std::map<std::string, Suggestion> suggestions_;
  std::size_t next_id_ = 1;
};

nlohmann::json to_json(const Suggestion& s);
Suggestion suggestion_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Spotlight& s);
Spotlight spotlight_from_json(const nlohmann::json& j);

}  // namespace ppad::suggest

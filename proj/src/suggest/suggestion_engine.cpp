#include "policypad/suggest/suggestion_engine.hpp"

#include <cstdio>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"
#include "policypad/doc/codec.hpp"
#include "policypad/policy/blocks.hpp"

namespace ppad::suggest {

using nlohmann::json;

std::string_view to_string(SuggestionStatus s) {
  switch (s) {
    case SuggestionStatus::kProposed: return "proposed";
    case SuggestionStatus::kAccepted: return "accepted";
    case SuggestionStatus::kRejected: return "rejected";
  }
  return "?";
}

namespace {

SuggestionStatus status_from_string(std::string_view s) {
  if (s == "accepted") return SuggestionStatus::kAccepted;
  if (s == "rejected") return SuggestionStatus::kRejected;
  return SuggestionStatus::kProposed;
}

}  // namespace

llm::LlmRequest make_suggestion_request(const policy::PolicyText& policy, const policy::HeuristicSet& heuristics,
                                        const scenario::Scenario& scenario, const std::string& original,
                                        const std::string& edited) {
  std::string convo;
  for (const auto& t : scenario.background) convo += std::string(to_string(t.role)) + ": " + t.text + "\n";
  convo += "user: " + scenario.newest_user.text + "\n";
  std::string hs;
  for (const auto& h : heuristics.items) hs += "- " + h.text + "\n";

  llm::LlmRequest req;
  req.role = llm::LlmRole::kReasoning;
  req.task = llm::LlmTask::kSuggestion;
  req.system =
      "You help a group of experts write a behavioral policy for an AI model. The group edited a "
      "response the policy-informed model gave in a test conversation. Analyze how the edited "
      "response differs from the original in the context of the current policy and the group's "
      "heuristics, then propose exactly one new policy statement designed to steer the model "
      "towards producing responses more like the edited version. The statement must follow the "
      "heuristics and must not repeat what the policy already says.\n\n"
      "Reply with a JSON object only: {\"statement\":\"...\"}";
  req.messages.push_back({Role::kUser,
                          "Current policy:\n" + policy.raw + "\n\nHeuristics:\n" + hs + "\nConversation:\n" +
                              convo + "\nOriginal response:\n" + original + "\n\nEdited response:\n" + edited,
                          0});
  req.params = llm::default_params(req.role);
  req.hints[llm::hint::kOriginal] = original;
  req.hints[llm::hint::kEdited] = edited;
  return req;
}

std::string parse_suggestion(const json& reply) {
  if (!reply.contains("statement") || !reply["statement"].is_string() ||
      text::is_blank(reply["statement"].get<std::string>())) {
    throw llm::LlmError(llm::FailureKind::kStructuredOutput, "suggestion reply has no statement");
  }
  return std::string(text::trim(reply["statement"].get<std::string>()));
}

std::vector<doc::DocOp> accept_ops(doc::Replica& replica, const doc::PositionId& anchor,
                                   const std::string& statement, const std::string& suggestion_id) {
  const auto nodes = replica.materialize();
  const auto blocks = policy::parse_blocks(nodes);

  // Index of the anchor, or of the last node before where it stood.
  std::optional<std::size_t> at;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].synthetic) continue;
    if (nodes[i].id == anchor) {
      at = i;
      break;
    }
    if (nodes[i].id < anchor) at = i;
  }

  doc::PositionId after = doc::PositionId::begin();
  if (at) {
    const auto b = policy::block_containing(blocks, *at);
    after = nodes[b == static_cast<std::size_t>(-1) ? *at : blocks[b].last_node].id;
  }

  auto item = doc::DocNode::list_item();
  item.attrs[std::string(kSuggestionAttr)] = suggestion_id;
  return replica.insert_run_after(after, {item, doc::DocNode::text_run(statement), doc::DocNode::text_run("\n")});
}

const Spotlight& SuggestionEngine::spotlight(const std::string& scenario_id, const doc::PositionId& widget,
                                             const std::string& response_text) {
  auto it = spotlights_.find(widget);
  if (it != spotlights_.end()) {
    if (it->second.active) fail(ErrorCode::kAlreadySpotlighted, "widget is already spotlighted");
    it->second.active = true;
    return it->second;
  }
  Spotlight s;
  s.scenario_id = scenario_id;
  s.widget = widget;
  s.baseline = response_text;
  doc::Replica seed{std::string(kSpotlightReplica)};
  if (!response_text.empty()) seed.insert_text(0, response_text);
  s.subdoc = seed.state();
  return spotlights_.emplace(widget, std::move(s)).first->second;
}

Spotlight& SuggestionEngine::mut_spotlight(const doc::PositionId& widget) {
  auto it = spotlights_.find(widget);
  if (it == spotlights_.end()) fail(ErrorCode::kNotFound, "no spotlight on that widget");
  return it->second;
}

const Spotlight& SuggestionEngine::unspotlight(const doc::PositionId& widget) {
  auto& s = mut_spotlight(widget);
  if (!s.active) fail(ErrorCode::kNotFound, "widget is not spotlighted");
  s.active = false;
  return s;
}

doc::ApplyOutcome SuggestionEngine::apply_edit(const doc::PositionId& widget, const doc::DocOp& op,
                                               std::string* reason) {
  auto& s = mut_spotlight(widget);
  if (!s.active) {
    if (reason) *reason = "spotlight is closed";
    return doc::ApplyOutcome::kRejected;
  }
  return s.subdoc.apply(op, reason);
}

SaveDraft SuggestionEngine::begin_save(const doc::PositionId& widget) const {
  auto it = spotlights_.find(widget);
  if (it == spotlights_.end()) fail(ErrorCode::kNotFound, "no spotlight on that widget");
  const auto& s = it->second;
  if (!s.active) fail(ErrorCode::kPrecondition, "spotlight is not active");
  auto edited = s.edited_text();
  if (edited == s.baseline) fail(ErrorCode::kNoEdit, "edited response equals the original");
  return {s.scenario_id, widget, s.baseline, std::move(edited)};
}

void SuggestionEngine::mark_saved(const doc::PositionId& widget, const std::string& edited) {
  mut_spotlight(widget).baseline = edited;
}

const Suggestion& SuggestionEngine::add(const SaveDraft& draft, std::string statement) {
  if (text::is_blank(statement)) fail(ErrorCode::kInvalidArgument, "blank suggestion statement");
  char buf[32];
  std::string id;
  do {
    std::snprintf(buf, sizeof(buf), "sg-%04zu", next_id_++);
    id = buf;
  } while (suggestions_.count(id));
  Suggestion s{id, draft.scenario_id, draft.original, draft.edited, std::move(statement),
               SuggestionStatus::kProposed, draft.widget};
  return suggestions_.emplace(id, std::move(s)).first->second;
}

const Suggestion& SuggestionEngine::resolve(const std::string& suggestion_id, Decision decision) {
  auto it = suggestions_.find(suggestion_id);
  if (it == suggestions_.end()) fail(ErrorCode::kNotFound, "no suggestion '" + suggestion_id + "'");
  if (it->second.status != SuggestionStatus::kProposed) {
    fail(ErrorCode::kAlreadyResolved, "suggestion '" + suggestion_id + "' is already " +
                                          std::string(to_string(it->second.status)));
  }
  it->second.status = decision == Decision::kAccept ? SuggestionStatus::kAccepted : SuggestionStatus::kRejected;
  return it->second;
}

const Suggestion& SuggestionEngine::get(const std::string& id) const {
  auto it = suggestions_.find(id);
  if (it == suggestions_.end()) fail(ErrorCode::kNotFound, "no suggestion '" + id + "'");
  return it->second;
}

const Spotlight* SuggestionEngine::find_spotlight(const doc::PositionId& widget) const {
  auto it = spotlights_.find(widget);
  return it == spotlights_.end() ? nullptr : &it->second;
}

void SuggestionEngine::put(Spotlight s) {
  auto key = s.widget;
  spotlights_.insert_or_assign(std::move(key), std::move(s));
}

void SuggestionEngine::put(Suggestion s) {
  unsigned n = 0;
  if (std::sscanf(s.id.c_str(), "sg-%u", &n) == 1) next_id_ = std::max<std::size_t>(next_id_, n + 1);
  auto key = s.id;
  suggestions_.insert_or_assign(std::move(key), std::move(s));
}

json to_json(const Suggestion& s) {
  return {{"id", s.id},
          {"scenarioId", s.scenario_id},
          {"original", s.original},
          {"edited", s.edited},
          {"statement", s.statement},
          {"status", to_string(s.status)},
          {"anchor", doc::to_json(s.anchor)}};
}

Suggestion suggestion_from_json(const json& j) {
  return {j.at("id").get<std::string>(),
          j.at("scenarioId").get<std::string>(),
          j.at("original").get<std::string>(),
          j.at("edited").get<std::string>(),
          j.at("statement").get<std::string>(),
          status_from_string(j.at("status").get<std::string>()),
          doc::position_from_json(j.at("anchor"))};
}

json to_json(const Spotlight& s) {
  return {{"scenarioId", s.scenario_id},
          {"widget", doc::to_json(s.widget)},
          {"subdoc", doc::to_json(s.subdoc)},
          {"baseline", s.baseline},
          {"active", s.active}};
}

Spotlight spotlight_from_json(const json& j) {
  Spotlight s;
  s.scenario_id = j.at("scenarioId").get<std::string>();
  s.widget = doc::position_from_json(j.at("widget"));
  s.subdoc = doc::doc_state_from_json(j.at("subdoc"));
  s.baseline = j.at("baseline").get<std::string>();
  s.active = j.at("active").get<bool>();
  return s;
}

}  // namespace ppad::suggest

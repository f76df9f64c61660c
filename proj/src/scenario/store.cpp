#include "policypad/scenario/store.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"
#include "policypad/llm/scaffold.hpp"

namespace ppad::scenario {

llm::LlmRequest make_chat_request(const Scenario& s, const std::string& system) {
  llm::LlmRequest req;
  req.role = llm::LlmRole::kPolicyInformed;
  req.task = llm::LlmTask::kChat;
  req.system = system;
  req.messages = s.background;
  req.messages.push_back(s.newest_user);
  req.params = llm::default_params(req.role);
  return req;
}

llm::LlmRequest make_summary_request(const Scenario& s) {
  std::string transcript;
  for (const auto& t : s.background) {
    transcript += std::string(to_string(t.role)) + ": " + t.text + "\n";
  }
  transcript += "user: " + s.newest_user.text + "\n";

  llm::LlmRequest req;
  req.role = llm::LlmRole::kUtility;
  req.task = llm::LlmTask::kSummary;
  req.system =
      "You write one-sentence summaries of conversations between a user and an AI assistant. "
      "Describe who the user is and what they want in at most 25 words. Reply with the summary only.";
  req.messages.push_back({Role::kUser, "Title: " + s.title + "\n\nConversation:\n" + transcript, 0});
  req.params = llm::default_params(req.role);
  req.hints[llm::hint::kTitle] = s.title;
  req.hints[llm::hint::kTurnCount] = std::to_string(s.turn_count());
  return req;
}

ScenarioStore::ScenarioStore(Clock clock, std::size_t max_turns)
    : clock_(std::move(clock)), max_turns_(max_turns) {}

std::string ScenarioStore::allocate_id() {
  char buf[32];
  std::string id;
  do {
    std::snprintf(buf, sizeof(buf), "sc-%04zu", next_id_++);
    id = buf;
  } while (scenarios_.count(id));
  return id;
}

Scenario& ScenarioStore::mut(std::string_view id) {
  auto it = scenarios_.find(id);
  if (it == scenarios_.end()) fail(ErrorCode::kNotFound, "no scenario '" + std::string(id) + "'");
  return it->second;
}

const Scenario& ScenarioStore::get(std::string_view id) const {
  auto it = scenarios_.find(id);
  if (it == scenarios_.end()) fail(ErrorCode::kNotFound, "no scenario '" + std::string(id) + "'");
  return it->second;
}

const Scenario* ScenarioStore::find(std::string_view id) const {
  auto it = scenarios_.find(id);
  return it == scenarios_.end() ? nullptr : &it->second;
}

bool ScenarioStore::is_live(std::string_view id) const {
  const auto* s = find(id);
  return s && !s->deleted;
}

Scenario ScenarioStore::prepare_create(NewScenario spec) const {
  if (text::is_blank(spec.title)) fail(ErrorCode::kInvalidArgument, "scenario title is blank");
  validate_turns(spec.background, spec.newest_user, max_turns_);
  Scenario s;
  s.title = std::string(text::trim(spec.title));
  s.background = std::move(spec.background);
  s.newest_user = std::move(spec.newest_user);
  const auto now = clock_();
  for (auto& t : s.background) {
    if (t.created == 0) t.created = now;
  }
  if (s.newest_user.created == 0) s.newest_user.created = now;
  s.shared = spec.shared;
  s.owner = std::move(spec.owner);
  s.parent = std::move(spec.parent);
  return s;
}

const Scenario& ScenarioStore::commit_create(Scenario s) {
  if (s.id.empty()) s.id = allocate_id();
  if (scenarios_.count(s.id)) fail(ErrorCode::kInvalidArgument, "duplicate scenario id '" + s.id + "'");
  if (s.parent && !find(*s.parent)) fail(ErrorCode::kNotFound, "unknown parent '" + *s.parent + "'");
  order_.push_back(s.id);
  auto id = s.id;
  auto [it, _] = scenarios_.emplace(id, std::move(s));
  return it->second;
}

const Scenario& ScenarioStore::create(NewScenario spec, llm::LlmGateway& gateway) {
  Scenario s = prepare_create(std::move(spec));
  s.summary = text::trim(gateway.dispatch(make_summary_request(s)).text);
  return commit_create(std::move(s));
}

const ResponseRecord& ScenarioStore::regenerate(std::string_view id, const policy::PolicyText& live,
                                                llm::LlmGateway& gateway,
                                                const llm::ScaffoldConfig& scaffold) {
  const auto& s = get(id);
  auto reply = gateway.dispatch(make_chat_request(s, llm::build_policy_scaffold(live, scaffold)));
  return commit_response(id, kWorkingVersion, std::move(reply.text));
}

const ResponseRecord& ScenarioStore::commit_response(std::string_view id, std::string_view version,
                                                     std::string text) {
  auto& s = mut(id);
  ResponseRecord rec;
  rec.version = std::string(version);
  rec.text = std::move(text);
  rec.provenance = Provenance::kGenerated;
  s.failures.erase(rec.version);
  auto& slot = s.responses[rec.version];
  slot = std::move(rec);
  return slot;
}

Scenario ScenarioStore::prepare_extension(std::string_view id, std::string_view user_text,
                                          const std::string& actor) const {
  if (text::is_blank(user_text)) fail(ErrorCode::kEmptyText, "extension message is empty");
  const auto& src = get(id);
  const auto* newest = src.newest_response();
  if (!newest) fail(ErrorCode::kPrecondition, "scenario has no response yet; regenerate before extending");

  Scenario c = src;
  const bool in_place = !src.shared && src.owner == actor;
  if (!in_place) {
    c.id.clear();
    c.parent = src.id;
    c.shared = false;
    c.owner = actor;
    c.flag.reset();
    c.title = src.title + " (extended)";
  }
  const auto now = clock_();
  c.background.push_back(src.newest_user);
  c.background.push_back({Role::kAssistant, newest->text, now});
  c.newest_user = {Role::kUser, std::string(text::trim(user_text)), now};
  c.responses.clear();
  c.failures.clear();
  validate_turns(c.background, c.newest_user, max_turns_);
  return c;
}

const Scenario& ScenarioStore::commit_extension(Scenario candidate) {
  if (candidate.id.empty()) return commit_create(std::move(candidate));
  auto& slot = mut(candidate.id);
  slot = std::move(candidate);
  return slot;
}

const Scenario& ScenarioStore::extend(std::string_view id, std::string_view user_text,
                                      const std::string& actor, const policy::PolicyText& live,
                                      llm::LlmGateway& gateway, const llm::ScaffoldConfig& scaffold) {
  Scenario c = prepare_extension(id, user_text, actor);
  auto reply = gateway.dispatch(make_chat_request(c, llm::build_policy_scaffold(live, scaffold)));
  c.responses[std::string(kWorkingVersion)] = {std::string(kWorkingVersion), reply.text,
                                               Provenance::kGenerated, std::nullopt, false};
  c.summary = text::trim(gateway.dispatch(make_summary_request(c)).text);
  return commit_extension(std::move(c));
}

const Scenario& ScenarioStore::publish(std::string_view id, const std::string& actor,
                                       llm::LlmGateway& gateway) {
  const auto& s = get(id);
  if (s.shared) return s;
  if (s.owner != actor) fail(ErrorCode::kNotFound, "no scenario '" + std::string(id) + "'");
  auto summary = text::trim(gateway.dispatch(make_summary_request(s)).text);
  return commit_publish(id, std::string(summary));
}

const Scenario& ScenarioStore::commit_publish(std::string_view id, std::string summary) {
  auto& s = mut(id);
  s.shared = true;
  s.summary = std::move(summary);
  return s;
}

bool ScenarioStore::flag(std::string_view id, const std::string& actor, std::optional<std::string> note) {
  auto& s = mut(id);
  if (s.flag) return false;
  s.flag = Flag{actor, clock_(), std::move(note)};
  return true;
}

bool ScenarioStore::unflag(std::string_view id, const std::string&) {
  auto& s = mut(id);
  if (!s.flag) return false;
  s.flag.reset();
  return true;
}

bool ScenarioStore::remove(std::string_view id) {
  auto& s = mut(id);
  if (s.deleted) return false;
  s.deleted = true;
  return true;
}

const ResponseRecord& ScenarioStore::save_human_edit(std::string_view id, std::string edited,
                                                     std::string original) {
  auto& s = mut(id);
  auto& rec = s.responses[std::string(kWorkingVersion)];
  rec.version = std::string(kWorkingVersion);
  rec.text = std::move(edited);
  rec.provenance = Provenance::kHumanEdited;
  rec.superseded = std::move(original);
  rec.showing_superseded = false;
  return rec;
}

const ResponseRecord& ScenarioStore::toggle_response(std::string_view id, std::string_view version) {
  auto& s = mut(id);
  auto it = s.responses.find(std::string(version));
  if (it == s.responses.end()) fail(ErrorCode::kNotFound, "no response for version '" + std::string(version) + "'");
  if (it->second.provenance != Provenance::kHumanEdited) {
    fail(ErrorCode::kPrecondition, "only human-edited responses can be toggled");
  }
  it->second.showing_superseded = !it->second.showing_superseded;
  return it->second;
}

void ScenarioStore::record_failure(std::string_view id, std::string_view version, std::string error) {
  mut(id).failures[std::string(version)] = std::move(error);
}

void ScenarioStore::clear_working(std::string_view id) {
  mut(id).responses.erase(std::string(kWorkingVersion));
}

std::vector<const Scenario*> ScenarioStore::gallery() const {
  std::vector<const Scenario*> out;
  for (const auto& id : order_) {
    const auto& s = scenarios_.find(id)->second;
    if (s.shared && !s.deleted) out.push_back(&s);
  }
  return out;
}

std::vector<const Scenario*> ScenarioStore::visible_to(std::string_view client) const {
  std::vector<const Scenario*> out;
  for (const auto& id : order_) {
    const auto& s = scenarios_.find(id)->second;
    if (s.deleted) continue;
    if (s.shared || s.owner == client) out.push_back(&s);
  }
  return out;
}

std::vector<const Scenario*> ScenarioStore::all() const {
  std::vector<const Scenario*> out;
  for (const auto& id : order_) out.push_back(&scenarios_.find(id)->second);
  return out;
}

std::vector<std::string> ScenarioStore::lineage(std::string_view id) const {
  std::vector<std::string> chain;
  std::set<std::string> seen;
  const Scenario* cur = &get(id);
  while (cur->parent) {
    if (!seen.insert(*cur->parent).second) fail(ErrorCode::kPrecondition, "scenario lineage has a cycle");
    chain.push_back(*cur->parent);
    cur = find(*cur->parent);
    if (!cur) break;
  }
  return chain;
}

void ScenarioStore::put(Scenario s) {
  auto it = scenarios_.find(s.id);
  if (it == scenarios_.end()) {
    order_.push_back(s.id);
    // Keep the id counter ahead of restored ids.
    unsigned n = 0;
    if (std::sscanf(s.id.c_str(), "sc-%u", &n) == 1) next_id_ = std::max<std::size_t>(next_id_, n + 1);
    auto id = s.id;
    scenarios_.emplace(std::move(id), std::move(s));
  } else {
    it->second = std::move(s);
  }
}

}  // namespace ppad::scenario

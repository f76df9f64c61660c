#include "policypad/scenario/scenario.hpp"

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"

namespace ppad::scenario {

using nlohmann::json;

std::string_view to_string(Provenance p) {
  return p == Provenance::kGenerated ? "generated" : "human-edited";
}

const ResponseRecord* Scenario::newest_response() const {
  if (auto it = responses.find(std::string(kWorkingVersion)); it != responses.end()) return &it->second;
  const ResponseRecord* best = nullptr;
  long best_version = -1;
  for (const auto& [version, rec] : responses) {
    if (version == kWorkingVersion) continue;
    const long v = std::stol(version);
    if (v > best_version) {
      best_version = v;
      best = &rec;
    }
  }
  return best;
}

void validate_turns(const std::vector<Turn>& background, const Turn& newest_user, std::size_t max_turns) {
  auto bad = [](const std::string& why) { fail(ErrorCode::kInvalidTurnStructure, why); };
  for (std::size_t i = 0; i < background.size(); ++i) {
    const Role expected = i % 2 == 0 ? Role::kUser : Role::kAssistant;
    if (background[i].role != expected) bad("background turns must alternate starting with user");
    if (text::is_blank(background[i].text)) bad("background turn " + std::to_string(i) + " is blank");
  }
  if (!background.empty() && background.back().role != Role::kAssistant) {
    bad("background must end with an assistant turn");
  }
  if (newest_user.role != Role::kUser) bad("newest message must be a user turn");
  if (text::is_blank(newest_user.text)) bad("newest user message is blank");
  if (background.size() + 1 > max_turns) bad("scenario exceeds " + std::to_string(max_turns) + " turns");
}

json to_json(const Turn& t) {
  return {{"role", to_string(t.role)}, {"text", t.text}, {"created", t.created}};
}

Turn turn_from_json(const json& j) {
  return {role_from_string(j.at("role").get<std::string>()), j.at("text").get<std::string>(),
          j.value("created", Timestamp{0})};
}

json to_json(const Scenario& s) {
  json bg = json::array();
  for (const auto& t : s.background) bg.push_back(to_json(t));
  json responses = json::object();
  for (const auto& [v, r] : s.responses) {
    json jr{{"version", r.version}, {"text", r.text}, {"provenance", to_string(r.provenance)}};
    if (r.superseded) jr["superseded"] = *r.superseded;
    if (r.showing_superseded) jr["showingSuperseded"] = true;
    responses[v] = std::move(jr);
  }
  json j{{"id", s.id},
         {"title", s.title},
         {"summary", s.summary},
         {"background", std::move(bg)},
         {"newestUser", to_json(s.newest_user)},
         {"responses", std::move(responses)},
         {"shared", s.shared},
         {"owner", s.owner},
         {"deleted", s.deleted}};
  if (!s.failures.empty()) j["failures"] = s.failures;
  if (s.flag) {
    json f{{"actor", s.flag->actor}, {"time", s.flag->time}};
    if (s.flag->note) f["note"] = *s.flag->note;
    j["flag"] = std::move(f);
  }
  if (s.parent) j["parent"] = *s.parent;
  return j;
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.id = j.at("id").get<std::string>();
  s.title = j.at("title").get<std::string>();
  s.summary = j.value("summary", "");
  for (const auto& t : j.at("background")) s.background.push_back(turn_from_json(t));
  s.newest_user = turn_from_json(j.at("newestUser"));
  const auto responses = j.value("responses", json::object());
  for (const auto& [v, jr] : responses.items()) {
    ResponseRecord r;
    r.version = jr.at("version").get<std::string>();
    r.text = jr.at("text").get<std::string>();
    r.provenance = jr.at("provenance").get<std::string>() == "generated" ? Provenance::kGenerated
                                                                          : Provenance::kHumanEdited;
    if (jr.contains("superseded")) r.superseded = jr["superseded"].get<std::string>();
    r.showing_superseded = jr.value("showingSuperseded", false);
    s.responses.emplace(v, std::move(r));
  }
  if (j.contains("failures")) s.failures = j["failures"].get<std::map<std::string, std::string>>();
  if (j.contains("flag")) {
    Flag f;
    f.actor = j["flag"].at("actor").get<std::string>();
    f.time = j["flag"].at("time").get<Timestamp>();
    if (j["flag"].contains("note")) f.note = j["flag"]["note"].get<std::string>();
    s.flag = std::move(f);
  }
  if (j.contains("parent")) s.parent = j["parent"].get<std::string>();
  s.shared = j.value("shared", true);
  s.owner = j.value("owner", "");
  s.deleted = j.value("deleted", false);
  return s;
}

}  // namespace ppad::scenario

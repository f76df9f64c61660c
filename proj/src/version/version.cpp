#include "policypad/version/version.hpp"

#include <algorithm>

#include "policypad/core/errors.hpp"

namespace ppad::version {

using nlohmann::json;
using policy::HeuristicStatus;

json to_json(const HeuristicResult& r) {
  return {{"heuristicId", r.heuristic_id},
          {"text", r.text},
          {"status", policy::to_string(r.status)},
          {"justification", r.justification}};
}

json to_json(const PolicyVersion& v) {
  json results = json::array();
  for (const auto& r : v.results) results.push_back(to_json(r));
  json j{{"id", v.id},
         {"frozen", policy::to_json(v.frozen)},
         {"title", v.title},
         {"results", std::move(results)},
         {"created", v.created},
         {"state", v.state == VersionState::kPending ? "pending" : "complete"},
         {"evaluated", v.evaluated}};
  j["diffBasis"] = v.diff_basis ? json(*v.diff_basis) : json(nullptr);
  return j;
}

PolicyVersion version_from_json(const json& j) {
  PolicyVersion v;
  v.id = j.at("id").get<int>();
  v.frozen = policy::policy_text_from_json(j.at("frozen"));
  v.title = j.at("title").get<std::string>();
  for (const auto& r : j.at("results")) {
    v.results.push_back({r.at("heuristicId").get<std::string>(), r.at("text").get<std::string>(),
                         policy::heuristic_status_from_string(r.at("status").get<std::string>()),
                         r.at("justification").get<std::string>()});
  }
  v.created = j.at("created").get<Timestamp>();
  if (j.contains("diffBasis") && !j["diffBasis"].is_null()) v.diff_basis = j["diffBasis"].get<int>();
  v.state = j.value("state", "complete") == "pending" ? VersionState::kPending : VersionState::kComplete;
  v.evaluated = j.value("evaluated", true);
  return v;
}

std::vector<HeuristicResult> pending_results(const policy::HeuristicSet& set) {
  std::vector<HeuristicResult> out;
  for (const auto& h : set.items) {
    out.push_back({h.id, h.text, HeuristicStatus::kUnevaluated, std::string(kPendingJustification)});
  }
  return out;
}

const PolicyVersion& VersionHistory::append(PolicyVersion v) {
  if (v.id != next_id()) {
    fail(ErrorCode::kPrecondition, "version id " + std::to_string(v.id) + " is not the next id " +
                                       std::to_string(next_id()));
  }
  versions_.push_back(std::move(v));
  return versions_.back();
}

PolicyVersion& VersionHistory::mut(int id) {
  auto it = std::find_if(versions_.begin(), versions_.end(), [&](const auto& v) { return v.id == id; });
  if (it == versions_.end()) fail(ErrorCode::kNotFound, "no version " + std::to_string(id));
  return *it;
}

const PolicyVersion& VersionHistory::finalize(int id, std::string title, std::vector<HeuristicResult> results) {
  auto& v = mut(id);
  v.title = std::move(title);
  v.results = std::move(results);
  v.state = VersionState::kComplete;
  v.evaluated = true;
  return v;
}

const PolicyVersion& VersionHistory::set_results(int id, std::vector<HeuristicResult> results) {
  auto& v = mut(id);
  v.results = std::move(results);
  v.evaluated = true;
  return v;
}

const PolicyVersion& VersionHistory::get(int id) const {
  const auto* v = find(id);
  if (!v) fail(ErrorCode::kNotFound, "no version " + std::to_string(id));
  return *v;
}

const PolicyVersion* VersionHistory::find(int id) const {
  auto it = std::find_if(versions_.begin(), versions_.end(), [&](const auto& v) { return v.id == id; });
  return it == versions_.end() ? nullptr : &*it;
}

const PolicyVersion* VersionHistory::latest() const { return versions_.empty() ? nullptr : &versions_.back(); }

std::vector<int> VersionHistory::ids() const {
  std::vector<int> out;
  for (const auto& v : versions_) out.push_back(v.id);
  return out;
}

void VersionHistory::put(PolicyVersion v) {
  auto it = std::find_if(versions_.begin(), versions_.end(), [&](const auto& x) { return x.id == v.id; });
  if (it != versions_.end()) {
    *it = std::move(v);
    return;
  }
  versions_.push_back(std::move(v));
  std::sort(versions_.begin(), versions_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

std::optional<scenario::ResponseRecord> get_response(const scenario::ScenarioStore& store,
                                                     const VersionHistory& history,
                                                     std::string_view scenario_id,
                                                     std::string_view version_id) {
  const auto& s = store.get(scenario_id);
  if (version_id != scenario::kWorkingVersion) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(std::string(version_id), &used);
      if (used != version_id.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(ErrorCode::kNotFound, "no version '" + std::string(version_id) + "'");
    }
    history.get(id);
  }
  auto it = s.responses.find(std::string(version_id));
  if (it == s.responses.end()) return std::nullopt;
  return it->second;
}

}  // namespace ppad::version

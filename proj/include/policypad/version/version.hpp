#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/core/types.hpp"
#include "policypad/llm/gateway.hpp"
#include "policypad/policy/heuristics.hpp"
#include "policypad/policy/policy_text.hpp"
#include "policypad/scenario/store.hpp"

namespace ppad::version {

inline constexpr std::string_view kPendingTitle = "pending";
inline constexpr std::string_view kPendingJustification = "pending";

struct HeuristicResult {
  std::string heuristic_id;
  std::string text;
  policy::HeuristicStatus status = policy::HeuristicStatus::kUnevaluated;
  std::string justification;

  bool operator==(const HeuristicResult&) const = default;
};

enum class VersionState { kPending, kComplete };

struct PolicyVersion {
  int id = 0;
  policy::PolicyText frozen;
  std::string title;
  std::vector<HeuristicResult> results;
  Timestamp created = 0;
  std::optional<int> diff_basis;
  VersionState state = VersionState::kComplete;
  // False while results are placeholders awaiting a lazy evaluation
  // (version 0 starts that way).
  bool evaluated = true;

  bool operator==(const PolicyVersion&) const = default;
};

nlohmann::json to_json(const PolicyVersion& v);
PolicyVersion version_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HeuristicResult& r);

// Placeholder results: one per heuristic, unevaluated, justification
// "pending".
std::vector<HeuristicResult> pending_results(const policy::HeuristicSet& set);

// Append-only list of versions with strictly increasing ids. Frozen text is
// immutable once appended; only title/results/state may be finalized.
class VersionHistory {
 public:
  const PolicyVersion& append(PolicyVersion v);
  // Finalize a pending version (title/results/state/evaluated only).
  const PolicyVersion& finalize(int id, std::string title, std::vector<HeuristicResult> results);
  const PolicyVersion& set_results(int id, std::vector<HeuristicResult> results);

  const PolicyVersion& get(int id) const;  // throws kNotFound
  const PolicyVersion* find(int id) const;
  const PolicyVersion* latest() const;
  std::vector<int> ids() const;
  const std::vector<PolicyVersion>& list() const { return versions_; }
  int next_id() const { return versions_.empty() ? 0 : versions_.back().id + 1; }

  // Restore path.
  void put(PolicyVersion v);

 private:
  PolicyVersion& mut(int id);
  std::vector<PolicyVersion> versions_;
};

llm::LlmRequest make_title_request(int version, const std::string& diff);
llm::LlmRequest make_heuristic_request(const policy::PolicyText& frozen, const policy::HeuristicSet& set);

// Unified diff of the two frozen raw texts.
std::string policy_diff(const policy::PolicyText& before, const policy::PolicyText& after, int before_id,
                        int after_id);

// Utility-role title; "Version {n}" when the call fails or returns nothing.
std::string generate_title(int version, const std::string& diff, llm::LlmGateway& gateway);

// Machine judgment only: overrides are ignored. Requires a non-empty set
// (kPrecondition). A failed or unparseable evaluation yields all
// unevaluated with the error as justification.
std::vector<HeuristicResult> evaluate_heuristics(const policy::PolicyText& frozen,
                                                 const policy::HeuristicSet& set, llm::LlmGateway& gateway);

// Response of `scenario_id` under version `version_id` ("working" allowed).
// Unknown scenario or version throws kNotFound; a scenario with no record
// for that version yields nullopt.
std::optional<scenario::ResponseRecord> get_response(const scenario::ScenarioStore& store,
                                                     const VersionHistory& history,
                                                     std::string_view scenario_id,
                                                     std::string_view version_id);

struct SnapshotJob {
  int version = 0;
  policy::PolicyText frozen;
  policy::PolicyText previous;
  int previous_id = 0;
  policy::HeuristicSet heuristics;
  std::vector<scenario::Scenario> gallery;
  llm::ScaffoldConfig scaffold = llm::ScaffoldConfig::defaults();
};

struct SnapshotOutcome {
  std::string title;
  std::vector<HeuristicResult> results;
  std::map<std::string, std::string> responses;  // scenario id -> text
  std::map<std::string, std::string> failures;   // scenario id -> error
};

// The LLM half of a snapshot: title, heuristic evaluation and one
// regeneration per gallery scenario, all issued concurrently and bounded by
// the gateway's in-flight cap. Per-scenario failures are collected, never
// thrown.
SnapshotOutcome run_snapshot(const SnapshotJob& job, llm::LlmGateway& gateway);

}  // namespace ppad::version

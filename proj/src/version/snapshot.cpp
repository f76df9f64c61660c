#include <future>

#include "policypad/core/errors.hpp"
#include "policypad/core/line_diff.hpp"
#include "policypad/core/text.hpp"
#include "policypad/llm/scaffold.hpp"
#include "policypad/version/version.hpp"

namespace ppad::version {

using nlohmann::json;
using policy::HeuristicStatus;

std::string policy_diff(const policy::PolicyText& before, const policy::PolicyText& after, int before_id,
                        int after_id) {
  return diff::unified_diff(before.raw, after.raw, "v" + std::to_string(before_id),
                            "v" + std::to_string(after_id));
}

llm::LlmRequest make_title_request(int version, const std::string& diff) {
  llm::LlmRequest req;
  req.role = llm::LlmRole::kUtility;
  req.task = llm::LlmTask::kTitle;
  req.system =
      "You name versions of a behavioral policy for an AI model. Given a unified diff between the "
      "previous and the new version, write a short title (at most 8 words) that captures the key "
      "changes. Reply with the title only, prefixed by \"v" +
      std::to_string(version) + ": \".";
  req.messages.push_back({Role::kUser, diff.empty() ? std::string("(no textual changes)") : diff, 0});
  req.params = llm::default_params(req.role);
  req.hints[llm::hint::kVersion] = std::to_string(version);
  req.hints[llm::hint::kDiff] = diff;
  return req;
}

llm::LlmRequest make_heuristic_request(const policy::PolicyText& frozen, const policy::HeuristicSet& set) {
  json hs = json::array();
  std::string listing;
  for (const auto& h : set.items) {
    hs.push_back({{"id", h.id}, {"text", h.text}});
    listing += "- id: " + h.id + "\n  heuristic: " + h.text + "\n";
  }
  llm::LlmRequest req;
  req.role = llm::LlmRole::kReasoning;
  req.task = llm::LlmTask::kHeuristicEval;
  req.system =
      "You review behavioral policies written for AI models. Heuristics are quality criteria for "
      "the policy text itself, not for model outputs. For each heuristic decide whether the policy "
      "as written satisfies it, and justify the decision in one or two sentences that point at the "
      "relevant statements. Your verdicts are prompts for discussion, not final rulings.\n\n"
      "Reply with a JSON object only:\n"
      "{\"results\":[{\"id\":\"<heuristic id>\",\"status\":\"satisfied\"|\"unsatisfied\","
      "\"justification\":\"...\"}]}\n"
      "Include every heuristic exactly once.";
  req.messages.push_back(
      {Role::kUser, "Policy:\n" + frozen.raw + "\n\nHeuristics:\n" + listing, 0});
  req.params = llm::default_params(req.role);
  req.hints[llm::hint::kHeuristics] = hs.dump();
  return req;
}

std::string generate_title(int version, const std::string& diff, llm::LlmGateway& gateway) {
  const std::string fallback = "Version " + std::to_string(version);
  try {
    auto reply = gateway.dispatch(make_title_request(version, diff));
    auto title = std::string(text::trim(reply.text));
    if (auto nl = title.find('\n'); nl != std::string::npos) title.resize(nl);
    return title.empty() ? fallback : title;
  } catch (const Error&) {
    return fallback;
  }
}

std::vector<HeuristicResult> evaluate_heuristics(const policy::PolicyText& frozen,
                                                 const policy::HeuristicSet& set, llm::LlmGateway& gateway) {
  if (set.items.empty()) fail(ErrorCode::kPrecondition, "heuristic evaluation needs at least one heuristic");

  auto all_unevaluated = [&](const std::string& why) {
    std::vector<HeuristicResult> out;
    for (const auto& h : set.items) out.push_back({h.id, h.text, HeuristicStatus::kUnevaluated, why});
    return out;
  };

  json reply;
  try {
    reply = gateway.dispatch_json(make_heuristic_request(frozen, set));
  } catch (const Error& e) {
    return all_unevaluated(std::string("evaluation failed: ") + e.what());
  }

  std::map<std::string, std::pair<HeuristicStatus, std::string>> verdicts;
  if (reply.contains("results") && reply["results"].is_array()) {
    for (const auto& r : reply["results"]) {
      if (!r.is_object() || !r.contains("id") || !r["id"].is_string()) continue;
      const auto status = r.value("status", "");
      HeuristicStatus st = HeuristicStatus::kUnevaluated;
      if (status == "satisfied") st = HeuristicStatus::kSatisfied;
      if (status == "unsatisfied") st = HeuristicStatus::kUnsatisfied;
      std::string why = r.value("justification", "");
      if (why.empty()) why = "no justification given";
      verdicts.emplace(r["id"].get<std::string>(), std::make_pair(st, std::move(why)));
    }
  }
  std::vector<HeuristicResult> out;
  for (const auto& h : set.items) {
    auto it = verdicts.find(h.id);
    if (it == verdicts.end()) {
      out.push_back({h.id, h.text, HeuristicStatus::kUnevaluated, "no verdict returned for this heuristic"});
    } else {
      out.push_back({h.id, h.text, it->second.first, it->second.second});
    }
  }
  return out;
}

SnapshotOutcome run_snapshot(const SnapshotJob& job, llm::LlmGateway& gateway) {
  const auto system = llm::build_policy_scaffold(job.frozen, job.scaffold);
  const auto diff = policy_diff(job.previous, job.frozen, job.previous_id, job.version);

  auto title = std::async(std::launch::async, [&] { return generate_title(job.version, diff, gateway); });
  auto results = std::async(std::launch::async, [&] {
    return job.heuristics.items.empty() ? std::vector<HeuristicResult>{}
                                        : evaluate_heuristics(job.frozen, job.heuristics, gateway);
  });

  struct Regen {
    std::string id;
    std::future<std::string> text;
  };
  std::vector<Regen> regens;
  for (const auto& s : job.gallery) {
    regens.push_back({s.id, std::async(std::launch::async, [&gateway, &system, &s] {
                        return gateway.dispatch(scenario::make_chat_request(s, system)).text;
                      })});
  }

  SnapshotOutcome out;
  for (auto& r : regens) {
    try {
      out.responses[r.id] = r.text.get();
    } catch (const std::exception& e) {
      out.failures[r.id] = e.what();
    }
  }
  out.title = title.get();
  out.results = results.get();
  return out;
}

}  // namespace ppad::version

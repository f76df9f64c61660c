#include "policypad/policy/heuristics.hpp"

#include <algorithm>

#include "policypad/core/errors.hpp"
#include "policypad/policy/blocks.hpp"

namespace ppad::policy {

std::string_view to_string(HeuristicStatus s) {
  switch (s) {
    case HeuristicStatus::kSatisfied: return "satisfied";
    case HeuristicStatus::kUnsatisfied: return "unsatisfied";
    case HeuristicStatus::kUnevaluated: return "unevaluated";
  }
  return "unevaluated";
}

HeuristicStatus heuristic_status_from_string(std::string_view s) {
  if (s == "satisfied") return HeuristicStatus::kSatisfied;
  if (s == "unsatisfied") return HeuristicStatus::kUnsatisfied;
  if (s == "unevaluated") return HeuristicStatus::kUnevaluated;
  fail(ErrorCode::kInvalidArgument, "unknown heuristic status '" + std::string(s) + "'");
}

const Heuristic* HeuristicSet::find(std::string_view id) const {
  auto it = std::find_if(items.begin(), items.end(), [&](const Heuristic& h) { return h.id == id; });
  return it == items.end() ? nullptr : &*it;
}

namespace {

Heuristic& require(HeuristicSet& set, const std::string& id) {
  auto it = std::find_if(set.items.begin(), set.items.end(),
                         [&](const Heuristic& h) { return h.id == id; });
  if (it == set.items.end()) fail(ErrorCode::kUnknownHeuristic, "unknown heuristic id '" + id + "'");
  return *it;
}

}  // namespace

HeuristicSet edit_heuristics(HeuristicSet set, const HeuristicChange& change) {
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AddHeuristic>) {
          std::string id = c.id;
          for (std::size_t n = set.items.size() + 1; id.empty() || set.find(id); ++n) {
            id = "h" + std::to_string(n);
          }
          set.items.push_back({id, c.text, HeuristicStatus::kUnevaluated, std::nullopt});
        } else if constexpr (std::is_same_v<T, RemoveHeuristic>) {
          require(set, c.id);
          std::erase_if(set.items, [&](const Heuristic& h) { return h.id == c.id; });
        } else if constexpr (std::is_same_v<T, RetextHeuristic>) {
          require(set, c.id).text = c.text;
        } else {
          require(set, c.id).override_ = c.value;
        }
      },
      change);
  return set;
}

HeuristicSet extract_heuristics(const std::vector<doc::MaterializedNode>& nodes) {
  HeuristicSet set;
  for (const auto& b : parse_blocks(nodes)) {
    if (!b.in_heuristics || b.in_draft || b.kind != BlockKind::kListItem || b.text.empty()) continue;
    set.items.push_back({b.marker.to_string(), b.text, HeuristicStatus::kUnevaluated, std::nullopt});
  }
  return set;
}

nlohmann::json to_json(const Override& o) {
  return {{"status", to_string(o.status)}, {"actor", o.actor}, {"time", o.time}};
}

Override override_from_json(const nlohmann::json& j) {
  return {heuristic_status_from_string(j.at("status").get<std::string>()),
          j.at("actor").get<std::string>(), j.at("time").get<Timestamp>()};
}

}  // namespace ppad::policy

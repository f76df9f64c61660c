#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/core/types.hpp"
#include "policypad/doc/doc_state.hpp"

namespace ppad::policy {

enum class HeuristicStatus { kSatisfied, kUnsatisfied, kUnevaluated };

std::string_view to_string(HeuristicStatus s);
HeuristicStatus heuristic_status_from_string(std::string_view s);

struct Override {
  HeuristicStatus status = HeuristicStatus::kSatisfied;
  std::string actor;
  Timestamp time = 0;

  bool operator==(const Override&) const = default;
};

struct Heuristic {
  std::string id;
  std::string text;
  HeuristicStatus machine = HeuristicStatus::kUnevaluated;
  std::optional<Override> override_;

  HeuristicStatus effective() const { return override_ ? override_->status : machine; }
  bool operator==(const Heuristic&) const = default;
};

struct HeuristicSet {
  std::vector<Heuristic> items;

  const Heuristic* find(std::string_view id) const;
  bool operator==(const HeuristicSet&) const = default;
};

struct AddHeuristic {
  std::string text;
  std::string id;  // generated when empty
};
struct RemoveHeuristic {
  std::string id;
};
struct RetextHeuristic {
  std::string id;
  std::string text;
};
// An empty `value` clears the override.
struct OverrideHeuristic {
  std::string id;
  std::optional<Override> value;
};

using HeuristicChange = std::variant<AddHeuristic, RemoveHeuristic, RetextHeuristic, OverrideHeuristic>;

// Throws Error(kUnknownHeuristic) when the target id is absent.
HeuristicSet edit_heuristics(HeuristicSet set, const HeuristicChange& change);

// List items under the level-1 "Heuristics" heading, outside drafting
// blocks. Ids are the list-item marker positions, so they survive edits to
// neighbouring items.
HeuristicSet extract_heuristics(const std::vector<doc::MaterializedNode>& nodes);

nlohmann::json to_json(const Override& o);
Override override_from_json(const nlohmann::json& j);

}  // namespace ppad::policy

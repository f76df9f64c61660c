#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/doc/doc_state.hpp"

namespace ppad::policy {

struct Statement {
  std::string section;
  std::string text;

  bool operator==(const Statement&) const = default;
};

// Model-facing policy: everything outside drafting blocks and outside the
// heuristics section, with widgets contributing nothing.
struct PolicyText {
  std::vector<Statement> statements;
  // Headings as "#".."###" lines, list items as "- " lines, paragraphs
  // verbatim, joined by '\n'.
  std::string raw;

  bool operator==(const PolicyText&) const = default;
};

PolicyText extract_policy_text(const std::vector<doc::MaterializedNode>& nodes);

nlohmann::json to_json(const PolicyText& p);
PolicyText policy_text_from_json(const nlohmann::json& j);

// Lookup the widget resolver needs from whatever holds scenarios.
class ScenarioDirectory {
 public:
  virtual ~ScenarioDirectory() = default;
  // True when the scenario exists and has not been deleted.
  virtual bool is_live(std::string_view scenario_id) const = 0;
};

enum class WidgetResolution { kLive, kDangling };

struct WidgetRef {
  doc::PositionId position;
  std::string scenario_id;
  WidgetResolution resolution = WidgetResolution::kLive;

  bool operator==(const WidgetRef&) const = default;
};

std::vector<WidgetRef> resolve_widgets(const std::vector<doc::MaterializedNode>& nodes,
                                       const ScenarioDirectory& store);

}  // namespace ppad::policy

#include "policypad/policy/policy_text.hpp"

#include "policypad/policy/blocks.hpp"

namespace ppad::policy {

PolicyText extract_policy_text(const std::vector<doc::MaterializedNode>& nodes) {
  PolicyText out;
  std::vector<std::string> lines;
  for (const auto& b : parse_blocks(nodes)) {
    if (b.in_draft || b.in_heuristics || b.text.empty()) continue;
    switch (b.kind) {
      case BlockKind::kHeading:
        lines.push_back(std::string(static_cast<std::size_t>(b.level), '#') + " " + b.text);
        break;
      case BlockKind::kListItem:
        lines.push_back("- " + b.text);
        out.statements.push_back({b.section, b.text});
        break;
      case BlockKind::kParagraph:
        lines.push_back(b.text);
        out.statements.push_back({b.section, b.text});
        break;
    }
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.raw += '\n';
    out.raw += lines[i];
  }
  return out;
}

nlohmann::json to_json(const PolicyText& p) {
  nlohmann::json statements = nlohmann::json::array();
  for (const auto& s : p.statements) statements.push_back({{"section", s.section}, {"text", s.text}});
  return {{"statements", std::move(statements)}, {"raw", p.raw}};
}

PolicyText policy_text_from_json(const nlohmann::json& j) {
  PolicyText p;
  p.raw = j.at("raw").get<std::string>();
  for (const auto& s : j.at("statements")) {
    p.statements.push_back({s.at("section").get<std::string>(), s.at("text").get<std::string>()});
  }
  return p;
}

std::vector<WidgetRef> resolve_widgets(const std::vector<doc::MaterializedNode>& nodes,
                                       const ScenarioDirectory& store) {
  std::vector<WidgetRef> out;
  for (const auto& n : nodes) {
    if (n.node.kind != doc::NodeKind::kScenarioWidget) continue;
    out.push_back({n.id, n.node.scenario_id,
                   store.is_live(n.node.scenario_id) ? WidgetResolution::kLive
                                                     : WidgetResolution::kDangling});
  }
  return out;
}

}  // namespace ppad::policy

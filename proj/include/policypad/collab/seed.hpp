#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "policypad/core/types.hpp"
#include "policypad/doc/replica.hpp"

namespace ppad::collab {

struct SeedScenario {
  std::string title;
  std::vector<Turn> turns;  // last one is the newest user message
};

// Facilitator-provided starting material for a session.
//   {"scenarios":[{"title":..., "turns":[{"role":"user","text":...}, ...]}],
//    "heuristics":["..."], "policy":"markdown-ish text"}
// Policy text: "# ", "## ", "### " headings, "- " list items, other lines
// are paragraphs, ":::draft" / ":::" bracket a drafting block, and
// "@[Scenario title]" places a scenario widget.
struct Seed {
  std::vector<SeedScenario> scenarios;
  std::vector<std::string> heuristics;
  std::string policy;
};

// Throws Error(kSeedParse) with a "line N" or field path in the message.
Seed parse_seed(std::string_view json_text);
Seed load_seed_file(const std::filesystem::path& path);

// Node sequence for a fresh session: a level-1 "Heuristics" section with one
// list item per heuristic, then the policy. A "Policy" heading is added when
// the policy does not open with its own level-1 heading, so the heuristics
// section always ends before the first statement. Text is one node per code
// point. `title_ids` resolves "@[Title]" widgets; unknown titles throw
// kSeedParse.
std::vector<doc::DocNode> seed_document_nodes(const std::vector<std::string>& heuristics, std::string_view policy,
                                              const std::map<std::string, std::string>& title_ids);

}  // namespace ppad::collab

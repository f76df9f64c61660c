#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "policypad/collab/seed.hpp"
#include "policypad/core/errors.hpp"
#include "policypad/doc/replica.hpp"
#include "policypad/policy/blocks.hpp"
#include "policypad/policy/heuristics.hpp"
#include "policypad/policy/policy_text.hpp"

namespace ppad::policy {
namespace {

using doc::DocNode;

std::vector<DocNode> line(std::string_view text, std::optional<DocNode> marker = std::nullopt) {
  std::vector<DocNode> out;
  if (marker) out.push_back(*marker);
  for (char c : text) out.push_back(DocNode::text_run(std::string(1, c)));
  out.push_back(DocNode::text_run("\n"));
  return out;
}

std::vector<doc::MaterializedNode> build(std::initializer_list<std::vector<DocNode>> parts) {
  std::vector<DocNode> all;
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return testing::materialize_nodes(all);
}

class FakeDirectory : public ScenarioDirectory {
 public:
  std::set<std::string> live;
  bool is_live(std::string_view id) const override { return live.count(std::string(id)) != 0; }
};

TEST(Blocks, NewlinesHeadingsAndItemsAreBoundaries) {
  auto nodes = build({line("Rules", DocNode::heading(1)), line("first"), line("second", DocNode::list_item())});
  auto blocks = parse_blocks(nodes);
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(blocks[0].kind, BlockKind::kHeading);
  EXPECT_EQ(blocks[1].text, "first");
  EXPECT_EQ(blocks[1].section, "Rules");
  EXPECT_EQ(blocks[2].kind, BlockKind::kListItem);
}

TEST(PolicyText, EmptyDocumentGivesEmptyPolicy) {
  auto p = extract_policy_text({});
  EXPECT_TRUE(p.statements.empty());
  EXPECT_EQ(p.raw, "");
}

TEST(PolicyText, DraftingBlockContentIsExcluded) {
  auto nodes = build({line("Policy", DocNode::heading(1)), line("Keep answers short."),
                      {DocNode::drafting_open()}, line("Maybe mention hotlines?"), {DocNode::drafting_close()},
                      line("Refer to professionals.", DocNode::list_item())});
  auto p = extract_policy_text(nodes);
  EXPECT_EQ(p.raw, "# Policy\nKeep answers short.\n- Refer to professionals.");
  ASSERT_EQ(p.statements.size(), 2u);
  EXPECT_EQ(p.statements[1].section, "Policy");
}

TEST(PolicyText, HeuristicsSectionIsNotPolicy) {
  auto nodes = build({line("Heuristics", DocNode::heading(1)), line("Be clear.", DocNode::list_item()),
                      line("Policy", DocNode::heading(1)), line("Be kind.", DocNode::list_item())});
  EXPECT_EQ(extract_policy_text(nodes).raw, "# Policy\n- Be kind.");
}

TEST(PolicyText, WidgetsContributeNoText) {
  auto body = line("See the example.");
  body.insert(body.begin() + 3, DocNode::widget("sc-0001"));
  auto nodes = build({body});
  EXPECT_EQ(extract_policy_text(nodes).raw, "See the example.");
}

TEST(PolicyText, JsonRoundTrip) {
  auto nodes = build({line("Objectives", DocNode::heading(1)), line("Help users.", DocNode::list_item())});
  auto p = extract_policy_text(nodes);
  EXPECT_EQ(policy_text_from_json(to_json(p)), p);
}

TEST(PolicyText, GeneratedDraftingDocsPartitionExactly) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto d = testing::random_drafting_doc(seed);
    auto p = extract_policy_text(testing::materialize_nodes(d.nodes));
    std::set<std::string> got;
    for (const auto& s : p.statements) got.insert(s.text);
    EXPECT_EQ(got, d.outside) << "seed " << seed;
    for (const auto& t : d.inside) EXPECT_EQ(p.raw.find(t), std::string::npos) << t;
  }
}

TEST(Heuristics, ExtractedFromHeuristicsSectionWithStableIds) {
  auto nodes = build({line("Heuristics", DocNode::heading(1)), line("Be clear.", DocNode::list_item()),
                      line("State scope.", DocNode::list_item()), line("Policy", DocNode::heading(1)),
                      line("Not a heuristic.", DocNode::list_item())});
  auto set = extract_heuristics(nodes);
  ASSERT_EQ(set.items.size(), 2u);
  EXPECT_EQ(set.items[0].text, "Be clear.");
  EXPECT_EQ(set.items[0].effective(), HeuristicStatus::kUnevaluated);
  EXPECT_NE(set.items[0].id, set.items[1].id);
  EXPECT_NE(set.find(set.items[1].id), nullptr);
}

TEST(Heuristics, OverrideWinsOverMachineStatus) {
  HeuristicSet set{{{"h1", "Be clear.", HeuristicStatus::kUnsatisfied, std::nullopt}}};
  set = edit_heuristics(set, OverrideHeuristic{"h1", Override{HeuristicStatus::kSatisfied, "c1", 5}});
  EXPECT_EQ(set.items[0].effective(), HeuristicStatus::kSatisfied);
  EXPECT_EQ(set.items[0].machine, HeuristicStatus::kUnsatisfied);
  set = edit_heuristics(set, OverrideHeuristic{"h1", std::nullopt});
  EXPECT_EQ(set.items[0].effective(), HeuristicStatus::kUnsatisfied);
}

TEST(Heuristics, EditsOnUnknownIdsFail) {
  HeuristicSet set;
  set = edit_heuristics(set, AddHeuristic{"Define jargon.", ""});
  ASSERT_EQ(set.items.size(), 1u);
  EXPECT_FALSE(set.items[0].id.empty());
  try {
    edit_heuristics(set, RemoveHeuristic{"nope"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownHeuristic);
  }
  set = edit_heuristics(set, RetextHeuristic{set.items[0].id, "Define legal jargon."});
  EXPECT_EQ(set.items[0].text, "Define legal jargon.");
  set = edit_heuristics(set, RemoveHeuristic{set.items[0].id});
  EXPECT_TRUE(set.items.empty());
}

TEST(Widgets, DeletedScenarioLeavesDanglingWidget) {
  auto body = line("x");
  body.insert(body.begin(), DocNode::widget("sc-0001"));
  body.insert(body.begin(), DocNode::widget("sc-0002"));
  auto nodes = build({body});
  FakeDirectory dir;
  dir.live = {"sc-0001"};
  auto refs = resolve_widgets(nodes, dir);
  ASSERT_EQ(refs.size(), 2u);
  EXPECT_EQ(refs[0].scenario_id, "sc-0002");
  EXPECT_EQ(refs[0].resolution, WidgetResolution::kDangling);
  EXPECT_EQ(refs[1].resolution, WidgetResolution::kLive);
}

TEST(SeedDocument, StarterPolicyBecomesObjectivesSection) {
  auto nodes = testing::materialize_nodes(collab::seed_document_nodes(
      {"Be clear."}, "# Objectives\n- Help users.\n:::draft\n- Idea\n:::\n", {}));
  auto p = extract_policy_text(nodes);
  EXPECT_EQ(p.raw, "# Objectives\n- Help users.");
  EXPECT_EQ(extract_heuristics(nodes).items.size(), 1u);
}

}  // namespace
}  // namespace ppad::policy

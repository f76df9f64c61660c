#include <gtest/gtest.h>

#include "policypad/core/errors.hpp"
#include "policypad/llm/mock_provider.hpp"
#include "policypad/scenario/store.hpp"
#include "policypad/version/version.hpp"
#include "support.hpp"

namespace ppad {
namespace {

using scenario::NewScenario;
using scenario::ScenarioStore;

Turn user(std::string t) { return {Role::kUser, std::move(t), 0}; }
Turn bot(std::string t) { return {Role::kAssistant, std::move(t), 0}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kGateway;
}

policy::PolicyText policy_of(std::string raw) {
  policy::PolicyText p;
  p.raw = raw;
  p.statements.push_back({"", raw});
  return p;
}

TEST(Turns, StructureIsValidated) {
  EXPECT_NO_THROW(scenario::validate_turns({}, user("hi")));
  EXPECT_NO_THROW(scenario::validate_turns({user("a"), bot("b")}, user("c")));
  EXPECT_EQ(code_of([] { scenario::validate_turns({user("a")}, user("c")); }), ErrorCode::kInvalidTurnStructure);
  EXPECT_EQ(code_of([] { scenario::validate_turns({bot("a"), user("b")}, user("c")); }),
            ErrorCode::kInvalidTurnStructure);
  EXPECT_EQ(code_of([] { scenario::validate_turns({}, user("  ")); }), ErrorCode::kInvalidTurnStructure);
  EXPECT_EQ(code_of([] { scenario::validate_turns({user("a"), bot("b")}, user("c"), 2); }),
            ErrorCode::kInvalidTurnStructure);
}

TEST(Store, CreateSummarizesWithUtilityRole) {
  auto& g = testing::mock_gateway();
  ScenarioStore store(testing::fixed_clock());
  const auto& s = store.create({"Panic", {user("a"), bot("b")}, user("c"), true, "", std::nullopt}, g);
  EXPECT_EQ(s.id, "sc-0001");
  EXPECT_EQ(s.summary, llm::MockProvider::summary_for("Panic", 3));
  EXPECT_EQ(g.counts().calls_for(llm::LlmRole::kUtility), 1);
  EXPECT_EQ(store.gallery().size(), 1u);
}

TEST(Store, RegenerateFillsWorkingSlotAndFailureLeavesItAlone) {
  std::shared_ptr<llm::MockProvider> mock;
  auto& g = testing::mock_gateway(&mock);
  ScenarioStore store(testing::fixed_clock());
  const auto id = store.create({"T", {}, user("help me"), true, "", std::nullopt}, g).id;
  const auto& rec = store.regenerate(id, policy_of("- be kind"), g);
  EXPECT_EQ(rec.version, scenario::kWorkingVersion);
  EXPECT_NE(rec.text.find("help me"), std::string::npos);
  const auto before = store.get(id);
  mock->add_fault({llm::LlmRole::kPolicyInformed, std::nullopt, "", llm::FailureKind::kTimeout, -1});
  EXPECT_THROW(store.regenerate(id, policy_of("- be terse"), g), llm::LlmError);
  EXPECT_EQ(store.get(id), before);
}

TEST(Store, DifferentPoliciesGiveDifferentResponses) {
  auto& g = testing::mock_gateway();
  ScenarioStore store(testing::fixed_clock());
  const auto id = store.create({"T", {}, user("help me"), true, "", std::nullopt}, g).id;
  const auto a = store.regenerate(id, policy_of("- be kind"), g).text;
  const auto b = store.regenerate(id, policy_of("- be terse"), g).text;
  EXPECT_NE(a, b);
}

TEST(Store, ExtendingSharedScenarioForksPrivateCopy) {
  auto& g = testing::mock_gateway();
  ScenarioStore store(testing::fixed_clock());
  const auto id = store.create({"T", {}, user("first"), true, "", std::nullopt}, g).id;
  EXPECT_EQ(code_of([&] { store.extend(id, "more", "c1", policy_of("p"), g); }), ErrorCode::kPrecondition);
  store.regenerate(id, policy_of("p"), g);
  EXPECT_EQ(code_of([&] { store.extend(id, "   ", "c1", policy_of("p"), g); }), ErrorCode::kEmptyText);
  const auto& fork = store.extend(id, "more", "c1", policy_of("p"), g);
  EXPECT_NE(fork.id, id);
  EXPECT_FALSE(fork.shared);
  EXPECT_EQ(fork.owner, "c1");
  EXPECT_EQ(fork.turn_count(), 3u);
  EXPECT_EQ(store.lineage(fork.id), (std::vector<std::string>{id}));
  EXPECT_EQ(store.get(id).turn_count(), 1u);
  EXPECT_EQ(store.visible_to("c1").size(), 2u);
  EXPECT_EQ(store.visible_to("c2").size(), 1u);
}

TEST(Store, FlagsAreIdempotentAndDeleteIsSoft) {
  auto& g = testing::mock_gateway();
  ScenarioStore store(testing::fixed_clock());
  const auto id = store.create({"T", {}, user("x"), true, "", std::nullopt}, g).id;
  EXPECT_TRUE(store.flag(id, "c1", std::string("odd tone")));
  EXPECT_FALSE(store.flag(id, "c2"));
  EXPECT_EQ(store.get(id).flag->actor, "c1");
  EXPECT_TRUE(store.unflag(id, "c2"));
  EXPECT_TRUE(store.remove(id));
  EXPECT_FALSE(store.is_live(id));
  EXPECT_TRUE(store.gallery().empty());
  EXPECT_NO_THROW(store.get(id));
}

TEST(Store, HumanEditsToggleBetweenTexts) {
  auto& g = testing::mock_gateway();
  ScenarioStore store(testing::fixed_clock());
  const auto id = store.create({"T", {}, user("x"), true, "", std::nullopt}, g).id;
  store.save_human_edit(id, "edited", "original");
  EXPECT_EQ(store.toggle_response(id, "working").displayed(), "original");
  EXPECT_EQ(store.toggle_response(id, "working").displayed(), "edited");
  store.commit_response(id, "1", "generated");
  EXPECT_EQ(code_of([&] { store.toggle_response(id, "1"); }), ErrorCode::kPrecondition);
}

TEST(Versions, AppendRequiresNextIdAndFrozenTextIsKept) {
  version::VersionHistory h;
  version::PolicyVersion v0;
  v0.frozen = policy_of("a");
  h.append(v0);
  version::PolicyVersion bad;
  bad.id = 5;
  EXPECT_EQ(code_of([&] { h.append(bad); }), ErrorCode::kPrecondition);
  version::PolicyVersion v1;
  v1.id = 1;
  v1.frozen = policy_of("b");
  v1.state = version::VersionState::kPending;
  h.append(v1);
  h.finalize(1, "v1: b", {});
  EXPECT_EQ(h.get(1).frozen.raw, "b");
  EXPECT_EQ(h.get(1).state, version::VersionState::kComplete);
  EXPECT_EQ(h.next_id(), 2);
  EXPECT_EQ(code_of([&] { h.get(9); }), ErrorCode::kNotFound);
}

TEST(Versions, TitleFallsBackWhenUtilityFails) {
  std::shared_ptr<llm::MockProvider> mock;
  auto& g = testing::mock_gateway(&mock);
  mock->add_fault({llm::LlmRole::kUtility, llm::LlmTask::kTitle, "", llm::FailureKind::kAuthFailure, -1});
  EXPECT_EQ(version::generate_title(3, "@@\n+- new rule\n", g), "Version 3");
}

TEST(Versions, HeuristicEvaluationIsMachineOnly) {
  llm::MockConfig cfg;
  cfg.failing_heuristics = {2};
  auto& g = testing::mock_gateway(nullptr, cfg);
  policy::HeuristicSet set;
  set.items.push_back({"h1", "Be clear.", policy::HeuristicStatus::kUnevaluated, std::nullopt});
  set.items.push_back({"h2", "State scope.", policy::HeuristicStatus::kUnevaluated,
                       policy::Override{policy::HeuristicStatus::kSatisfied, "c1", 1}});
  auto results = version::evaluate_heuristics(policy_of("- x"), set, g);
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[0].status, policy::HeuristicStatus::kSatisfied);
  EXPECT_EQ(results[1].status, policy::HeuristicStatus::kUnsatisfied);
  EXPECT_FALSE(results[1].justification.empty());
  EXPECT_EQ(code_of([&] { version::evaluate_heuristics(policy_of("- x"), {}, g); }), ErrorCode::kPrecondition);
}

TEST(Snapshot, OneCallPerScenarioPlusTitleAndEvaluation) {
  auto& g = testing::mock_gateway();
  ScenarioStore store(testing::fixed_clock());
  version::SnapshotJob job;
  job.version = 1;
  job.previous = policy_of("- old");
  job.frozen = policy_of("- new rule");
  for (int i = 0; i < 4; ++i) {
    job.gallery.push_back(store.create({"S" + std::to_string(i), {}, user("q" + std::to_string(i)), true, "",
                                        std::nullopt}, g));
  }
  job.heuristics.items.push_back({"h1", "Be clear.", policy::HeuristicStatus::kUnevaluated, std::nullopt});
  g.reset_counts();
  auto out = version::run_snapshot(job, g);
  EXPECT_EQ(g.counts().calls_for(llm::LlmRole::kPolicyInformed), 4);
  EXPECT_EQ(g.counts().calls_for(llm::LlmRole::kUtility), 1);
  EXPECT_EQ(g.counts().calls_for(llm::LlmRole::kReasoning), 1);
  EXPECT_EQ(out.responses.size(), 4u);
  EXPECT_EQ(out.results.size(), 1u);
  EXPECT_EQ(out.title.rfind("v1: ", 0), 0u) << out.title;
}

TEST(Snapshot, ScenarioFailureIsRecordedNotThrown) {
  std::shared_ptr<llm::MockProvider> mock;
  auto& g = testing::mock_gateway(&mock);
  ScenarioStore store(testing::fixed_clock());
  version::SnapshotJob job;
  job.version = 1;
  job.frozen = policy_of("- rule");
  job.gallery.push_back(store.create({"ok", {}, user("fine question"), true, "", std::nullopt}, g));
  job.gallery.push_back(store.create({"bad", {}, user("poison question"), true, "", std::nullopt}, g));
  job.heuristics.items.push_back({"h1", "Be clear.", policy::HeuristicStatus::kUnevaluated, std::nullopt});
  mock->add_fault({llm::LlmRole::kPolicyInformed, std::nullopt, "poison", llm::FailureKind::kTimeout, -1});
  auto out = version::run_snapshot(job, g);
  EXPECT_EQ(out.responses.size(), 1u);
  EXPECT_EQ(out.failures.count(job.gallery[1].id), 1u);
}

TEST(Versions, ResponseLookupByVersion) {
  auto& g = testing::mock_gateway();
  ScenarioStore store(testing::fixed_clock());
  version::VersionHistory h;
  version::PolicyVersion v0;
  h.append(v0);
  const auto id = store.create({"T", {}, user("x"), true, "", std::nullopt}, g).id;
  EXPECT_FALSE(version::get_response(store, h, id, "0"));
  store.commit_response(id, "0", "hello");
  EXPECT_EQ(version::get_response(store, h, id, "0")->text, "hello");
  EXPECT_EQ(code_of([&] { version::get_response(store, h, id, "4"); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { version::get_response(store, h, "sc-9", "0"); }), ErrorCode::kNotFound);
}

}  // namespace
}  // namespace ppad

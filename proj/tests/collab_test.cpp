#include <gtest/gtest.h>

#include <fstream>

#include "policypad/collab/persistence.hpp"
#include "policypad/collab/seed.hpp"
#include "policypad/collab/session.hpp"
#include "policypad/collab/wire.hpp"
#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"
#include "policypad/doc/codec.hpp"
#include "policypad/suggest/suggestion_engine.hpp"
#include "support.hpp"

namespace ppad::collab {
namespace {

using nlohmann::json;
using testing::Harness;
using testing::Peer;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kGateway;
}

Seed widget_seed() {
  auto seed = testing::starter_seed();
  seed.policy += "# Crisis\n- Point people in crisis to a hotline. @[Panic at work]\n";
  return seed;
}

doc::PositionId first_widget(const Session& s) {
  for (const auto& n : s.materialize()) {
    if (n.node.kind == doc::NodeKind::kScenarioWidget) return n.id;
  }
  ADD_FAILURE() << "no widget";
  return {};
}

std::size_t policy_end(const ClientReplica& c) { return c.materialize().size(); }

// --- wire -----------------------------------------------------------------------

TEST(Wire, RoundTripAndRejection) {
  WireMessage m{7, WireKind::kDocOp, {{"x", 1}}};
  EXPECT_EQ(parse_wire(serialize(m)), m);
  EXPECT_EQ(code_of([] { parse_wire("{not json"); }), ErrorCode::kProtocolViolation);
  EXPECT_EQ(code_of([] { parse_wire(R"({"kind":"teleport","body":{}})"); }), ErrorCode::kProtocolViolation);
  EXPECT_EQ(code_of([] { parse_wire(R"({"kind":"hello","body":3})"); }), ErrorCode::kProtocolViolation);
  EXPECT_EQ(make_error("busy", "later", "snapshot").body["action"], "snapshot");
}

// --- seed -----------------------------------------------------------------------

TEST(Seed, StarterSeedLoads) {
  auto seed = testing::starter_seed();
  EXPECT_EQ(seed.heuristics.size(), 3u);
  EXPECT_EQ(seed.scenarios.size(), 5u);
  for (const auto& s : seed.scenarios) {
    EXPECT_GE(s.turns.size(), 1u);
    EXPECT_LE(s.turns.size(), 5u);
  }
  EXPECT_NE(seed.policy.find("# Objectives"), std::string::npos);
}

TEST(Seed, ErrorsNameTheLineOrField) {
  try {
    parse_seed("{\n  \"scenarios\": [\n    {\"title\": }\n  ]\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSeedParse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    parse_seed(R"({"scenarios":[{"title":"t","turns":[{"role":"bot","text":"x"}]}]})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("scenarios[0].turns[0].role"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] {
              parse_seed(R"({"scenarios":[{"title":"t","turns":[{"role":"user","text":"a"},
                                                                  {"role":"assistant","text":"b"}]}]})");
            }),
            ErrorCode::kSeedParse);
  EXPECT_EQ(code_of([] { seed_document_nodes({}, "- see @[Nope]", {}); }), ErrorCode::kSeedParse);
}

TEST(Seed, TenScenarioSeedGivesTenGalleryEntries) {
  Seed seed;
  for (int i = 0; i < 10; ++i) {
    SeedScenario s{"S" + std::to_string(i), {}};
    for (int t = 0; t < 1 + i % 5; ++t) {
      if (t) s.turns.push_back({Role::kAssistant, "reply " + std::to_string(t), 0});
      s.turns.push_back({Role::kUser, "question " + std::to_string(t), 0});
    }
    seed.scenarios.push_back(s);
  }
  auto session = Session::create("s", seed, testing::mock_gateway(), {testing::fixed_clock()});
  EXPECT_EQ(session->scenarios().size(), 10u);
  EXPECT_EQ(session->export_bundle()["gallery"].size(), 10u);
}

// --- persistence -----------------------------------------------------------------

TEST(Persistence, TornFinalLineIsDroppedAndMidLogGarbageIsCorruption) {
  auto dir = testing::scratch_dir("log");
  {
    EventLog log(dir);
    log.write_meta({{"sessionId", "s"}});
    log.write_snapshot({{"n", 0}});
    log.append("doc-op", 1, {{"a", 1}});
    log.append("doc-op", 2, {{"a", 2}});
  }
  {
    std::ofstream out(dir / "events.log", std::ios::app);
    out << "{\"lsn\":3,\"seq\":3,\"ty";
  }
  auto rec = read_data_dir(dir);
  EXPECT_TRUE(rec.dropped_partial_tail);
  ASSERT_EQ(rec.tail.size(), 2u);
  EXPECT_EQ(rec.tail[1].data["a"], 2);

  {
    std::ofstream out(dir / "events.log", std::ios::app);
    out << "\n" << to_json(LogRecord{4, 4, "doc-op", {{"a", 4}}}).dump() << "\n";
  }
  EXPECT_EQ(code_of([&] { read_data_dir(dir); }), ErrorCode::kCorruptLog);
  std::filesystem::remove_all(dir);
}

TEST(Persistence, SnapshotStartsAFreshLog) {
  auto dir = testing::scratch_dir("snap");
  EventLog log(dir, 3);
  log.write_meta({{"sessionId", "s"}});
  EXPECT_FALSE(log.append("x", 1, {}));
  EXPECT_FALSE(log.append("x", 2, {}));
  EXPECT_TRUE(log.append("x", 3, {}));
  log.write_snapshot({{"upTo", 3}});
  log.append("x", 4, {});
  auto rec = read_data_dir(dir);
  EXPECT_EQ(rec.snapshot_lsn, 3u);
  EXPECT_EQ((*rec.snapshot_state)["upTo"], 3);
  ASSERT_EQ(rec.tail.size(), 1u);
  EXPECT_EQ(rec.tail[0].lsn, 4u);
  std::filesystem::remove_all(dir);
}

// --- suggestion engine ------------------------------------------------------------

TEST(SuggestionEngine, SpotlightLifecycleErrors) {
  suggest::SuggestionEngine e;
  doc::Replica r("a");
  auto w = r.insert(0, doc::DocNode::widget("sc-0001")).target;
  const auto& sp = e.spotlight("sc-0001", w, "Hello there.");
  EXPECT_EQ(sp.edited_text(), "Hello there.");
  EXPECT_EQ(code_of([&] { e.spotlight("sc-0001", w, "x"); }), ErrorCode::kAlreadySpotlighted);
  EXPECT_EQ(code_of([&] { e.begin_save(w); }), ErrorCode::kNoEdit);

  doc::Replica editor("c1", e.find_spotlight(w)->subdoc);
  auto op = editor.insert_text(0, "Oh. ");
  for (const auto& o : op) EXPECT_EQ(e.apply_edit(w, o), doc::ApplyOutcome::kApplied);
  auto draft = e.begin_save(w);
  EXPECT_EQ(draft.original, "Hello there.");
  EXPECT_EQ(draft.edited, "Oh. Hello there.");

  e.unspotlight(w);
  EXPECT_EQ(code_of([&] { e.begin_save(w); }), ErrorCode::kPrecondition);
  EXPECT_EQ(e.apply_edit(w, editor.insert_text(0, "x")[0]), doc::ApplyOutcome::kRejected);
  EXPECT_EQ(e.spotlight("sc-0001", w, "ignored").edited_text(), "Oh. Hello there.");

  const auto& sg = e.add(draft, "Be warm.");
  EXPECT_EQ(sg.id, "sg-0001");
  e.resolve(sg.id, suggest::Decision::kReject);
  EXPECT_EQ(code_of([&] { e.resolve("sg-0001", suggest::Decision::kAccept); }), ErrorCode::kAlreadyResolved);
}

TEST(SuggestionEngine, AcceptInsertsListItemAfterWidgetBlock) {
  doc::Replica r("server");
  r.insert_text(0, "Before\n");
  auto w = r.insert(r.size(), doc::DocNode::widget("sc-0001")).target;
  r.insert_text(r.size(), " tail\nAfter\n");
  suggest::accept_ops(r, w, "New rule.", "sg-0001");
  auto text = doc::plain_text(r.materialize());
  EXPECT_EQ(text, "Before\n tail\nNew rule.\nAfter\n");
  bool tagged = false;
  for (const auto& n : r.materialize()) {
    if (n.node.kind == doc::NodeKind::kListItem) tagged = n.node.attrs.at("suggestion-id") == "sg-0001";
  }
  EXPECT_TRUE(tagged);
}

// --- session -------------------------------------------------------------------------

struct SessionFixture : ::testing::Test {
  std::shared_ptr<llm::MockProvider> mock;
  llm::LlmGateway* gateway = &testing::mock_gateway(&mock);
  std::unique_ptr<Session> session = Session::create("s-test", widget_seed(), *gateway, {testing::fixed_clock()});
  Harness net{*session};
};

TEST_F(SessionFixture, HelloAssignsIdentityAndPeersConverge) {
  auto& a = net.join("Ana");
  auto& b = net.join("Ben");
  EXPECT_TRUE(a.replica->connected());
  EXPECT_NE(a.replica->client_id(), b.replica->client_id());
  a.replica->insert_text(policy_end(*a.replica), "- Ask before advising.\n");
  b.replica->insert_text(policy_end(*b.replica), "Keep it short.\n");
  net.pump();
  EXPECT_EQ(a.replica->materialize(), b.replica->materialize());
  EXPECT_EQ(a.replica->materialize(), session->materialize());
  EXPECT_EQ(a.replica->last_seq(), session->seq());
}

TEST_F(SessionFixture, OpsUnderAnotherIdentityAreRejected) {
  auto& a = net.join("Ana");
  doc::Replica forger("someone-else", session->doc_state());
  auto op = forger.insert(0, doc::DocNode::text_run("x"));
  a.outbox.push_back({std::nullopt, WireKind::kDocOp, {{"op", doc::to_json(op)}}});
  net.pump();
  ASSERT_FALSE(a.replica->errors().empty());
  EXPECT_EQ(a.replica->errors().back()["code"], "malformed-op");
  EXPECT_FALSE(a.channel->closed());
}

TEST_F(SessionFixture, GarbageFrameClosesTheConnection) {
  auto ch = std::make_shared<testing::CaptureChannel>();
  auto conn = session->attach(ch);
  session->handle_frame(conn, "][");
  EXPECT_TRUE(ch->closed());
  auto log = ch->log();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].kind, WireKind::kError);
  EXPECT_EQ(log[0].body["code"], "protocol-violation");

  auto ch2 = std::make_shared<testing::CaptureChannel>();
  auto conn2 = session->attach(ch2);
  session->handle(conn2, {std::nullopt, WireKind::kPresence, {{"cursor", 1}}});
  EXPECT_TRUE(ch2->closed());
}

TEST_F(SessionFixture, GapTriggersReplayResync) {
  auto& a = net.join("Ana");
  auto& b = net.join("Ben");
  a.replica->insert_text(policy_end(*a.replica), "one\n");
  net.pump();
  // Lose the next broadcast on Ben's link, then deliver a later one.
  a.replica->insert_text(policy_end(*a.replica), "two\n");
  for (auto& m : a.outbox) session->handle(a.conn, m);
  a.outbox.clear();
  auto lost = b.channel->take();
  ASSERT_GE(lost.size(), 2u);
  lost.pop_front();
  for (auto& m : lost) b.replica->receive(m);
  net.pump();
  EXPECT_EQ(b.replica->gap_resyncs(), 1u);
  EXPECT_EQ(b.replica->materialize(), session->materialize());
}

TEST_F(SessionFixture, ReconnectBeyondReplayWindowGetsFullState) {
  SessionOptions opts{testing::fixed_clock()};
  opts.replay_window = 2;
  auto small = Session::create("s-small", widget_seed(), *gateway, opts);
  Harness h(*small);
  auto& a = h.join("Ana");
  auto& b = h.join("Ben");
  const auto id = b.replica->client_id();
  small->detach(b.conn);
  for (int i = 0; i < 5; ++i) a.replica->insert_text(policy_end(*a.replica), "x");
  h.pump();
  auto& b2 = h.join("Ben again", id);
  EXPECT_EQ(b2.replica->client_id(), id);
  EXPECT_EQ(b2.replica->full_resyncs(), 1u);
  EXPECT_EQ(b2.replica->materialize(), small->materialize());
}

TEST_F(SessionFixture, SnapshotOfUnchangedPolicyIsANotice) {
  auto& a = net.join("Ana");
  net.act(a, WireKind::kVersionEvent, {{"action", "snapshot"}});
  ASSERT_EQ(a.replica->notices().size(), 1u);
  EXPECT_EQ(session->versions().size(), 1u);
}

TEST_F(SessionFixture, SnapshotGoesPendingThenFinal) {
  auto& a = net.join("Ana");
  auto& b = net.join("Ben");
  a.replica->insert_text(policy_end(*a.replica), "- Never diagnose.\n");
  net.pump();
  gateway->reset_counts();
  net.act(a, WireKind::kVersionEvent, {{"action", "snapshot"}});
  const auto versions = session->versions();
  ASSERT_EQ(versions.size(), 2u);
  EXPECT_EQ(versions[1].state, version::VersionState::kComplete);
  EXPECT_EQ(versions[1].results.size(), 3u);
  EXPECT_EQ(gateway->counts().calls_for(llm::LlmRole::kPolicyInformed), 5);
  EXPECT_EQ(b.replica->versions().at(1)["state"], "complete");
  bool saw_pending = false;
  for (const auto& m : b.channel->log()) {
    if (m.kind == WireKind::kVersionEvent && m.body.value("action", "") == "pending") saw_pending = true;
  }
  EXPECT_TRUE(saw_pending);
  for (const auto& s : session->scenarios()) EXPECT_EQ(s.responses.count("1"), 1u) << s.id;
}

TEST_F(SessionFixture, OverrideIsRecordedWithActor) {
  auto& a = net.join("Ana");
  const auto h = session->heuristics().items.at(0).id;
  net.act(a, WireKind::kVersionEvent, {{"action", "override"}, {"heuristicId", h}, {"status", "unsatisfied"}});
  auto set = session->heuristics();
  ASSERT_TRUE(set.items[0].override_);
  EXPECT_EQ(set.items[0].override_->actor, a.replica->client_id());
  EXPECT_EQ(set.items[0].effective(), policy::HeuristicStatus::kUnsatisfied);
  net.act(a, WireKind::kVersionEvent, {{"action", "override"}, {"heuristicId", "nope"}, {"status", "satisfied"}});
  EXPECT_EQ(a.replica->errors().back()["code"], "unknown-heuristic-id");
}

TEST_F(SessionFixture, HeuristicsCanBeAddedAndRemoved) {
  auto& a = net.join("Ana");
  net.act(a, WireKind::kVersionEvent,
          {{"action", "heuristic"}, {"change", {{"kind", "add"}, {"text", "Define jargon."}}}});
  auto set = session->heuristics();
  ASSERT_EQ(set.items.size(), 4u);
  EXPECT_EQ(set.items.back().text, "Define jargon.");
  net.act(a, WireKind::kVersionEvent,
          {{"action", "heuristic"}, {"change", {{"kind", "remove"}, {"id", set.items[0].id}}}});
  EXPECT_EQ(session->heuristics().items.size(), 3u);
  EXPECT_EQ(a.replica->materialize(), session->materialize());
  EXPECT_EQ(session->policy_text(), policy::extract_policy_text(a.replica->materialize()));
}

TEST_F(SessionFixture, PrivateScenarioStaysWithItsOwner) {
  auto& a = net.join("Ana");
  auto& b = net.join("Ben");
  net.act(a, WireKind::kScenarioEvent,
          {{"action", "create"}, {"title", "Secret case"}, {"newestUser", "zebra question"}});
  std::string id;
  for (const auto& [sid, s] : a.replica->scenarios()) {
    if (s["title"] == "Secret case") id = sid;
  }
  ASSERT_FALSE(id.empty());
  EXPECT_EQ(b.replica->scenarios().count(id), 0u);
  net.act(b, WireKind::kScenarioEvent, {{"action", "regenerate"}, {"scenarioId", id}});
  EXPECT_EQ(b.replica->errors().back()["code"], "not-found");
  net.act(a, WireKind::kScenarioEvent, {{"action", "publish"}, {"scenarioId", id}});
  EXPECT_EQ(b.replica->scenarios().count(id), 1u);
}

TEST_F(SessionFixture, SpotlightSaveAcceptInsertsStatementOnce) {
  auto& a = net.join("Ana");
  auto& b = net.join("Ben");
  const auto w = first_widget(*session);
  net.act(a, WireKind::kSpotlightEvent, {{"action", "spotlight"}, {"widget", doc::to_json(w)}});
  ASSERT_TRUE(b.replica->spotlight_active(w));
  net.act(a, WireKind::kSpotlightEvent, {{"action", "save"}, {"widget", doc::to_json(w)}});
  EXPECT_EQ(a.replica->errors().back()["code"], "no-edit");

  b.replica->spotlight_insert(w, 0, "Please call a hotline. ");
  net.pump();
  EXPECT_EQ(a.replica->spotlight_text(w), b.replica->spotlight_text(w));
  net.act(b, WireKind::kSpotlightEvent, {{"action", "save"}, {"widget", doc::to_json(w)}});
  ASSERT_EQ(session->suggestions().size(), 1u);
  const auto sg = session->suggestions()[0];
  EXPECT_NE(sg.statement.find("hotline"), std::string::npos) << sg.statement;

  const auto before = text::split_lines(doc::plain_text(session->materialize())).size();
  net.act(a, WireKind::kSuggestionEvent, {{"action", "resolve"}, {"suggestionId", sg.id}, {"decision", "accept"}});
  net.act(b, WireKind::kSuggestionEvent, {{"action", "resolve"}, {"suggestionId", sg.id}, {"decision", "accept"}});
  EXPECT_EQ(b.replica->errors().back()["code"], "already-resolved");
  const auto text = doc::plain_text(session->materialize());
  EXPECT_EQ(text::split_lines(text).size(), before + 1);
  EXPECT_NE(session->policy_text().raw.find(sg.statement), std::string::npos);
  EXPECT_EQ(a.replica->materialize(), session->materialize());
}

TEST_F(SessionFixture, SpotlightingPrivateScenarioIsRefused) {
  auto& a = net.join("Ana");
  net.act(a, WireKind::kScenarioEvent, {{"action", "create"}, {"title", "Mine"}, {"newestUser", "q"}});
  std::string id;
  for (const auto& [sid, s] : a.replica->scenarios()) {
    if (s["title"] == "Mine") id = sid;
  }
  a.replica->insert_node(policy_end(*a.replica), doc::DocNode::widget(id));
  net.pump();
  doc::PositionId w;
  for (const auto& n : session->materialize()) {
    if (n.node.kind == doc::NodeKind::kScenarioWidget && n.node.scenario_id == id) w = n.id;
  }
  net.act(a, WireKind::kSpotlightEvent, {{"action", "spotlight"}, {"widget", doc::to_json(w)}});
  EXPECT_EQ(a.replica->errors().back()["code"], "precondition-violation");
}

TEST_F(SessionFixture, FlagHighlightsWidgetsEverywhere) {
  auto& a = net.join("Ana");
  auto& b = net.join("Ben");
  const auto w = first_widget(*session);
  const auto sid = session->doc_state().find(w)->scenario_id;
  net.act(a, WireKind::kScenarioEvent, {{"action", "flag"}, {"scenarioId", sid}, {"note", "too vague"}});
  auto idx = b.replica->index_of(w);
  ASSERT_TRUE(idx);
  EXPECT_TRUE(b.replica->materialize()[*idx].node.flagged);
  EXPECT_EQ(b.replica->scenarios().at(sid)["flag"]["note"], "too vague");
}

TEST(SessionHeartbeat, SilentClientsAreDropped) {
  auto now = std::make_shared<Timestamp>(1000);
  SessionOptions opts{[now] { return *now; }};
  opts.heartbeat_ms = 100;
  auto s = Session::create("s-hb", testing::starter_seed(), testing::mock_gateway(), opts);
  Harness h(*s);
  auto& a = h.join("Ana");
  auto& b = h.join("Ben");
  *now += 250;
  b.replica->heartbeat();
  h.pump();
  *now += 100;
  s->tick();
  EXPECT_TRUE(a.channel->closed());
  EXPECT_FALSE(b.channel->closed());
  EXPECT_EQ(s->clients().size(), 1u);
}

TEST(SessionRestore, RestoredStateMatches) {
  auto dir = testing::scratch_dir("restore");
  auto& g = testing::mock_gateway();
  SessionOptions opts{testing::fixed_clock()};
  opts.data_dir = dir;
  opts.compact_every = 7;
  json before;
  std::uint64_t seq_before = 0;
  {
    auto s = Session::create("s-r", widget_seed(), g, opts);
    Harness h(*s);
    auto& a = h.join("Ana");
    for (int i = 0; i < 10; ++i) a.replica->insert_text(policy_end(*a.replica), "- rule " + std::to_string(i) + "\n");
    h.pump();
    h.act(a, WireKind::kVersionEvent, {{"action", "snapshot"}});
    h.act(a, WireKind::kScenarioEvent, {{"action", "create"}, {"title", "P"}, {"newestUser", "q"}});
    before = s->state_json(true);
    seq_before = s->seq();
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "versions" / "1.json"));
  auto r = Session::restore(dir, g, {testing::fixed_clock()});
  auto after = r->state_json(true);
  EXPECT_EQ(after["doc"], before["doc"]);
  EXPECT_EQ(after["scenarios"], before["scenarios"]);
  EXPECT_EQ(after["versions"], before["versions"]);
  EXPECT_GT(r->seq(), seq_before - 1);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace ppad::collab

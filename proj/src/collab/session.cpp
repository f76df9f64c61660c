#include "policypad/collab/session.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"
#include "policypad/doc/codec.hpp"
#include "policypad/llm/scaffold.hpp"
#include "policypad/policy/blocks.hpp"

namespace ppad::collab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json& field(const json& body, const char* key) {
  if (!body.contains(key)) fail(ErrorCode::kProtocolViolation, std::string("missing field '") + key + "'");
  return body[key];
}

std::string str_field(const json& body, const char* key) {
  const auto& v = field(body, key);
  if (!v.is_string()) fail(ErrorCode::kProtocolViolation, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

doc::PositionId position_field(const json& body, const char* key) {
  try {
    return doc::position_from_json(field(body, key));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProtocolViolation) throw;
    fail(ErrorCode::kProtocolViolation, std::string("field '") + key + "' is not a position: " + e.what());
  }
}

doc::DocOp op_field(const json& body) { return doc::op_from_json(field(body, "op")); }

// Runs `f` with the session lock released and takes it back afterwards,
// also when `f` throws.
template <class F>
auto unlocked(std::unique_lock<std::mutex>& lock, F&& f) {
  struct Relock {
    std::unique_lock<std::mutex>& l;
    ~Relock() { l.lock(); }
  };
  lock.unlock();
  Relock relock{lock};
  return f();
}

// The response a shared card shows: a human edit in the working slot, else
// the newest saved version. Generated working responses are sidebar-private.
const scenario::ResponseRecord* shared_response(const scenario::Scenario& s) {
  if (auto it = s.responses.find(std::string(scenario::kWorkingVersion));
      it != s.responses.end() && it->second.provenance == scenario::Provenance::kHumanEdited) {
    return &it->second;
  }
  const scenario::ResponseRecord* best = nullptr;
  long best_version = -1;
  for (const auto& [v, rec] : s.responses) {
    if (v == scenario::kWorkingVersion) continue;
    if (long n = std::stol(v); n > best_version) {
      best_version = n;
      best = &rec;
    }
  }
  return best;
}

json response_json(const scenario::ResponseRecord& r) {
  json j = {{"version", r.version},
            {"text", r.text},
            {"provenance", scenario::to_string(r.provenance)},
            {"showingSuperseded", r.showing_superseded},
            {"displayed", r.displayed()}};
  if (r.superseded) j["superseded"] = *r.superseded;
  return j;
}

json heuristics_json(const policy::HeuristicSet& set) {
  json out = json::array();
  for (const auto& h : set.items) {
    json j = {{"id", h.id},
              {"text", h.text},
              {"machine", policy::to_string(h.machine)},
              {"effective", policy::to_string(h.effective())}};
    if (h.override_) j["override"] = policy::to_json(*h.override_);
    out.push_back(std::move(j));
  }
  return out;
}

bool valid_client_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 && id != kServerReplica && id != suggest::kSpotlightReplica &&
         std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '-' || c == '_'; });
}

}  // namespace

Session::Session(std::string id, llm::LlmGateway& gateway, SessionOptions options)
    : id_(std::move(id)),
      gateway_(gateway),
      options_(std::move(options)),
      doc_(std::string(kServerReplica)),
      store_(options_.clock) {}

Session::~Session() { wait_idle(); }

std::unique_ptr<Session> Session::create(std::string id, const Seed& seed, llm::LlmGateway& gateway,
                                         SessionOptions options) {
  std::unique_ptr<Session> s(new Session(std::move(id), gateway, std::move(options)));

  std::map<std::string, std::string> title_ids;
  for (std::size_t i = 0; i < seed.scenarios.size(); ++i) {
    const auto& sc = seed.scenarios[i];
    scenario::NewScenario spec;
    spec.title = sc.title;
    spec.background.assign(sc.turns.begin(), sc.turns.end() - 1);
    spec.newest_user = sc.turns.back();
    spec.shared = true;
    scenario::Scenario prepared;
    try {
      prepared = s->store_.prepare_create(std::move(spec));
    } catch (const Error& e) {
      fail(ErrorCode::kSeedParse, "scenarios[" + std::to_string(i) + "].turns: " + e.what());
    }
    prepared.summary = std::string(text::trim(gateway.dispatch(scenario::make_summary_request(prepared)).text));
    const auto& created = s->store_.commit_create(std::move(prepared));
    title_ids.emplace(created.title, created.id);
  }

  const auto nodes = seed_document_nodes(seed.heuristics, seed.policy, title_ids);
  s->doc_.insert_run(0, nodes);

  version::PolicyVersion v0;
  v0.id = 0;
  v0.frozen = policy::extract_policy_text(s->doc_.materialize());
  v0.title = "Version 0";
  v0.results = version::pending_results(s->heuristics_locked());
  v0.created = s->options_.clock();
  v0.evaluated = false;
  s->versions_.append(std::move(v0));

  if (s->options_.data_dir) {
    s->log_ = std::make_unique<EventLog>(*s->options_.data_dir, s->options_.compact_every);
    s->log_->write_meta({{"sessionId", s->id_}, {"created", s->options_.clock()}});
    s->log_->write_snapshot(s->state_json(true));
    s->log_->write_version(0, version::to_json(s->versions_.get(0)));
  }
  return s;
}

std::unique_ptr<Session> Session::restore(const fs::path& dir, llm::LlmGateway& gateway, SessionOptions options) {
  auto rec = read_data_dir(dir);
  if (!rec.meta.contains("sessionId") || !rec.snapshot_state) {
    fail(ErrorCode::kCorruptLog, "data directory '" + dir.string() + "' has no session snapshot");
  }
  options.data_dir = dir;
  std::unique_ptr<Session> s(new Session(rec.meta["sessionId"].get<std::string>(), gateway, std::move(options)));
  try {
    s->load_state(*rec.snapshot_state);
    for (const auto& r : rec.tail) s->apply_record(r);
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptLog, std::string("unreadable record: ") + e.what());
  }
  // Records carry the seq current when they were written, which can trail
  // the seq of the broadcast that followed. Step past it so no seq a client
  // already saw is handed out again.
  ++s->seq_;
  // A snapshot cut short by the crash cannot resume; close it out so the
  // version list does not stay pending forever.
  for (auto v : s->versions_.list()) {
    if (v.state != version::VersionState::kPending) continue;
    const auto vid = std::to_string(v.id);
    for (const auto* sc : s->store_.gallery()) {
      if (!sc->responses.count(vid)) s->store_.record_failure(sc->id, vid, "the server stopped during this snapshot");
    }
    v.title = "Version " + vid;
    v.state = version::VersionState::kComplete;
    v.evaluated = false;  // left for a later "evaluate"
    s->versions_.put(std::move(v));
  }
  const auto next_lsn = (rec.tail.empty() ? rec.snapshot_lsn : rec.tail.back().lsn) + 1;
  s->log_ = std::make_unique<EventLog>(dir, s->options_.compact_every, next_lsn);
  // Fold the replayed tail (and any torn final line) into a clean snapshot.
  s->log_->write_snapshot(s->state_json(true));
  if (rec.dropped_partial_tail) {
    std::cerr << "policypad: dropped a partial final record while restoring " << dir << "\n";
  }
  return s;
}

// --- connections -----------------------------------------------------------

ConnectionId Session::attach(std::shared_ptr<ClientChannel> channel) {
  std::lock_guard lock(mu_);
  const auto id = next_conn_++;
  connections_.emplace(id, Connection{std::move(channel), std::nullopt});
  return id;
}

void Session::detach(ConnectionId conn) {
  std::lock_guard lock(mu_);
  auto it = connections_.find(conn);
  if (it == connections_.end()) return;
  auto client = it->second.client;
  connections_.erase(it);
  if (client && clients_.erase(*client)) broadcast(WireKind::kPresence, {{"action", "left"}, {"clientId", *client}});
}

void Session::close_connection(ConnectionId conn, std::string_view reason) {
  auto it = connections_.find(conn);
  if (it == connections_.end()) return;
  auto channel = it->second.channel;
  auto client = it->second.client;
  connections_.erase(it);
  channel->close(reason);
  if (client && clients_.erase(*client)) broadcast(WireKind::kPresence, {{"action", "left"}, {"clientId", *client}});
}

void Session::tick() {
  std::lock_guard lock(mu_);
  const auto cutoff = options_.clock() - options_.heartbeat_ms * options_.missed_heartbeats;
  std::vector<ConnectionId> stale;
  for (const auto& [conn, c] : connections_) {
    if (!c.client) continue;
    auto it = clients_.find(*c.client);
    if (it != clients_.end() && it->second.last_seen < cutoff) stale.push_back(conn);
  }
  for (auto conn : stale) close_connection(conn, "heartbeat timeout");
}

void Session::wait_idle() {
  std::thread t;
  {
    std::unique_lock lock(mu_);
    snapshot_done_.wait(lock, [&] { return !snapshot_running_; });
    t = std::move(snapshot_thread_);
  }
  if (t.joinable()) t.join();
}

void Session::handle_frame(ConnectionId conn, std::string_view frame) {
  WireMessage msg;
  try {
    msg = parse_wire(frame);
  } catch (const Error& e) {
    std::lock_guard lock(mu_);
    send_private(conn, WireKind::kError, make_error(to_string(e.code()), e.what()).body);
    close_connection(conn, e.what());
    return;
  }
  handle(conn, msg);
}

void Session::handle(ConnectionId conn, const WireMessage& msg) {
  std::unique_lock lock(mu_);
  auto it = connections_.find(conn);
  if (it == connections_.end()) return;
  const std::string action = msg.body.value("action", "");
  try {
    if (msg.kind == WireKind::kHello) {
      on_hello(conn, msg.body, lock);
      return;
    }
    if (!it->second.client) fail(ErrorCode::kProtocolViolation, "hello must be the first frame");
    const std::string client = *it->second.client;
    auto& info = clients_[client];
    info.last_seen = options_.clock();
    if (msg.body.contains("ack") && msg.body["ack"].is_number_unsigned()) {
      info.acked = std::max(info.acked, msg.body["ack"].get<std::uint64_t>());
    }
    switch (msg.kind) {
      case WireKind::kPresence: on_presence(client, msg.body); break;
      case WireKind::kResync: on_resync(conn, client, msg.body); break;
      case WireKind::kDocOp: on_doc_op(conn, client, msg.body); break;
      case WireKind::kScenarioEvent: on_scenario(conn, client, msg.body, lock); break;
      case WireKind::kSpotlightEvent: on_spotlight(conn, client, msg.body, lock); break;
      case WireKind::kVersionEvent: on_version(conn, client, msg.body, lock); break;
      case WireKind::kSuggestionEvent: on_suggestion(conn, client, msg.body); break;
      default:
        fail(ErrorCode::kProtocolViolation, "clients may not send '" + std::string(to_string(msg.kind)) + "'");
    }
  } catch (const Error& e) {
    send_private(conn, WireKind::kError, make_error(to_string(e.code()), e.what(), action).body);
    if (e.code() == ErrorCode::kProtocolViolation) close_connection(conn, e.what());
  } catch (const json::exception& e) {
    send_private(conn, WireKind::kError, make_error("protocol-violation", e.what(), action).body);
    close_connection(conn, e.what());
  }
}

std::string Session::allocate_client_id() {
  for (;;) {
    auto id = "c" + std::to_string(next_client_++);
    if (clients_.count(id)) continue;
    bool owner = false;
    for (const auto* s : store_.all()) owner = owner || s->owner == id;
    if (!owner) return id;
  }
}

void Session::on_hello(ConnectionId conn, const json& body, std::unique_lock<std::mutex>&) {
  auto& c = connections_.at(conn);
  if (c.client) fail(ErrorCode::kProtocolViolation, "hello sent twice");
  std::string client = body.value("clientId", "");
  if (!client.empty() && !valid_client_id(client)) fail(ErrorCode::kProtocolViolation, "invalid clientId");
  if (client.empty()) client = allocate_client_id();

  // A reconnect supersedes the client's previous connection.
  for (auto& [other, oc] : connections_) {
    if (other != conn && oc.client == client) {
      auto ch = oc.channel;
      connections_.erase(other);
      ch->close("replaced by a newer connection");
      break;
    }
  }
  connections_.at(conn).client = client;
  ClientInfo info;
  info.id = client;
  info.display_name = body.value("displayName", client);
  info.last_seen = options_.clock();
  clients_[client] = info;

  send_private(conn, WireKind::kHello,
               {{"clientId", client},
                {"sessionId", id_},
                {"seq", seq_},
                {"heartbeatMs", options_.heartbeat_ms}});
  std::optional<std::uint64_t> last;
  if (body.contains("lastSeq") && body["lastSeq"].is_number_unsigned()) last = body["lastSeq"].get<std::uint64_t>();
  resync_client(conn, client, last);
  broadcast(WireKind::kPresence,
            {{"action", "joined"}, {"clientId", client}, {"displayName", info.display_name}});
}

void Session::on_presence(const std::string& client, const json& body) {
  if (body.value("heartbeat", false)) return;  // last_seen already updated
  auto& info = clients_[client];
  if (body.contains("cursor")) info.cursor = body["cursor"];
  broadcast(WireKind::kPresence, {{"action", "cursor"}, {"clientId", client}, {"cursor", info.cursor}});
}

void Session::on_resync(ConnectionId conn, const std::string& client, const json& body) {
  std::optional<std::uint64_t> last;
  if (body.contains("lastSeq") && body["lastSeq"].is_number_unsigned()) last = body["lastSeq"].get<std::uint64_t>();
  resync_client(conn, client, last);
}

void Session::resync_client(ConnectionId conn, const std::string& client, std::optional<std::uint64_t> last) {
  const std::uint64_t oldest = history_.empty() ? seq_ + 1 : *history_.front().seq;
  if (last && *last <= seq_ && *last + 1 >= oldest) {
    json msgs = json::array();
    for (const auto& m : history_) {
      if (*m.seq > *last) msgs.push_back(to_json(m));
    }
    send_private(conn, WireKind::kResync, {{"mode", "replay"}, {"from", *last}, {"seq", seq_}, {"messages", msgs}});
    return;
  }
  send_private(conn, WireKind::kResync, {{"mode", "full"}, {"seq", seq_}, {"state", full_state_for(client)}});
}

// --- document ----------------------------------------------------------------

void Session::on_doc_op(ConnectionId conn, const std::string& client, const json& body) {
  auto op = op_field(body);
  if (op.id.replica != client) fail(ErrorCode::kMalformedOp, "op replica must be the sending client's id");
  std::string reason;
  switch (doc_.receive(op) == doc::ApplyOutcome::kApplied ? 0 : doc_.state().has_applied(op.id) ? 1 : 2) {
    case 0:
      record("doc-op", doc::to_json(op));
      broadcast(WireKind::kDocOp, {{"op", doc::to_json(op)}, {"clientId", client}});
      break;
    case 1:
      break;  // duplicate delivery
    default: {
      doc::DocState probe = doc_.state();
      probe.apply(op, &reason);
      send_private(conn, WireKind::kError, make_error("malformed-op", reason.empty() ? "op rejected" : reason).body);
    }
  }
}

void Session::emit_ops(const std::vector<doc::DocOp>& ops) {
  for (const auto& op : ops) {
    record("doc-op", doc::to_json(op));
    broadcast(WireKind::kDocOp, {{"op", doc::to_json(op)}, {"clientId", kServerReplica}});
  }
}

// --- scenarios -----------------------------------------------------------------

const scenario::Scenario& Session::visible_scenario(const std::string& client, const json& body) const {
  const auto id = str_field(body, "scenarioId");
  const auto* s = store_.find(id);
  if (!s || (!s->shared && s->owner != client)) fail(ErrorCode::kNotFound, "no scenario '" + id + "'");
  return *s;
}

json Session::scenario_view(const scenario::Scenario& s, bool with_working) const {
  json j = scenario::to_json(s);
  if (!with_working) {
    auto it = s.responses.find(std::string(scenario::kWorkingVersion));
    if (it != s.responses.end() && it->second.provenance == scenario::Provenance::kGenerated) {
      j["responses"].erase(std::string(scenario::kWorkingVersion));
    }
  }
  return j;
}

void Session::scenario_event(const scenario::Scenario& s, json body) {
  if (s.shared) {
    broadcast(WireKind::kScenarioEvent, std::move(body));
  } else {
    send_to_client(s.owner, WireKind::kScenarioEvent, std::move(body));
  }
}

void Session::on_scenario(ConnectionId conn, const std::string& client, const json& body,
                          std::unique_lock<std::mutex>& lock) {
  const auto action = str_field(body, "action");
  const auto& scaffold = gateway_.config().scaffold;

  if (action == "create") {
    scenario::NewScenario spec;
    spec.title = str_field(body, "title");
    for (const auto& t : body.value("background", json::array())) spec.background.push_back(scenario::turn_from_json(t));
    spec.newest_user = {Role::kUser, str_field(body, "newestUser"), 0};
    spec.shared = body.value("shared", false);
    spec.owner = client;
    auto prepared = store_.prepare_create(std::move(spec));
    auto req = scenario::make_summary_request(prepared);
    prepared.summary = unlocked(lock, [&] { return std::string(text::trim(gateway_.dispatch(req).text)); });
    const auto& s = store_.commit_create(std::move(prepared));
    record_scenario(s.id);
    scenario_event(s, {{"action", "created"}, {"scenario", scenario_view(s, !s.shared)}});
    return;
  }

  if (action == "regenerate") {
    const auto& s = visible_scenario(client, body);
    const auto id = s.id;
    auto req = scenario::make_chat_request(
        s, llm::build_policy_scaffold(policy::extract_policy_text(doc_.materialize()), scaffold));
    auto reply = unlocked(lock, [&] { return gateway_.dispatch(req); });
    const auto& rec = store_.commit_response(id, scenario::kWorkingVersion, std::move(reply.text));
    record_scenario(id);
    // Sidebar results are private to the requester, shared scenario or not.
    send_private(conn, WireKind::kScenarioEvent,
                 {{"action", "regenerated"}, {"scenarioId", id}, {"response", response_json(rec)}});
    return;
  }

  if (action == "extend") {
    const auto& s = visible_scenario(client, body);
    auto candidate = store_.prepare_extension(s.id, str_field(body, "text"), client);
    auto chat = scenario::make_chat_request(
        candidate, llm::build_policy_scaffold(policy::extract_policy_text(doc_.materialize()), scaffold));
    unlocked(lock, [&] {
      auto reply = gateway_.dispatch(chat);
      candidate.responses[std::string(scenario::kWorkingVersion)] = {
          std::string(scenario::kWorkingVersion), reply.text, scenario::Provenance::kGenerated, std::nullopt, false};
      candidate.summary = std::string(text::trim(gateway_.dispatch(scenario::make_summary_request(candidate)).text));
      return 0;
    });
    const auto& ext = store_.commit_extension(std::move(candidate));
    record_scenario(ext.id);
    send_to_client(ext.owner, WireKind::kScenarioEvent, {{"action", "extended"}, {"scenario", scenario_view(ext, true)}});
    return;
  }

  if (action == "publish") {
    const auto& s = visible_scenario(client, body);
    if (s.shared) return;
    if (s.owner != client) fail(ErrorCode::kNotFound, "no scenario '" + s.id + "'");
    const auto id = s.id;
    auto req = scenario::make_summary_request(s);
    auto summary = unlocked(lock, [&] { return std::string(text::trim(gateway_.dispatch(req).text)); });
    const auto& pub = store_.commit_publish(id, std::move(summary));
    record_scenario(id);
    broadcast(WireKind::kScenarioEvent, {{"action", "published"}, {"scenario", scenario_view(pub, false)}});
    return;
  }

  if (action == "flag" || action == "unflag") {
    const auto& s = visible_scenario(client, body);
    const bool on = action == "flag";
    std::optional<std::string> note;
    if (on && body.contains("note") && body["note"].is_string()) note = body["note"].get<std::string>();
    const bool changed = on ? store_.flag(s.id, client, note) : store_.unflag(s.id, client);
    if (!changed) return;
    record_scenario(s.id);
    json ev = {{"action", on ? "flagged" : "unflagged"}, {"scenarioId", s.id}};
    if (s.flag) ev["flag"] = scenario::to_json(s)["flag"];
    scenario_event(s, std::move(ev));
    if (s.shared) {
      std::vector<doc::DocOp> ops;
      for (const auto& n : doc_.materialize()) {
        if (n.node.kind == doc::NodeKind::kScenarioWidget && n.node.scenario_id == s.id && n.node.flagged != on) {
          auto node = n.node;
          node.flagged = on;
          ops.push_back(doc_.set_payload(n.id, std::move(node)));
        }
      }
      emit_ops(ops);
    }
    return;
  }

  if (action == "delete") {
    const auto& s = visible_scenario(client, body);
    if (!store_.remove(s.id)) return;
    record_scenario(s.id);
    scenario_event(s, {{"action", "deleted"}, {"scenarioId", s.id}});
    return;
  }

  if (action == "toggle") {
    const auto& s = visible_scenario(client, body);
    const auto& rec = store_.toggle_response(s.id, str_field(body, "version"));
    record_scenario(s.id);
    scenario_event(s, {{"action", "toggled"}, {"scenarioId", s.id}, {"response", response_json(rec)}});
    return;
  }

  fail(ErrorCode::kProtocolViolation, "unknown scenario action '" + action + "'");
}

// --- spotlights and suggestions ---------------------------------------------------

void Session::on_spotlight(ConnectionId conn, const std::string& client, const json& body,
                           std::unique_lock<std::mutex>& lock) {
  (void)conn;
  const auto action = str_field(body, "action");
  const auto widget = position_field(body, "widget");

  if (action == "spotlight") {
    const auto* node = doc_.state().contains_live(widget) ? doc_.state().find(widget) : nullptr;
    if (!node || node->kind != doc::NodeKind::kScenarioWidget) fail(ErrorCode::kNotFound, "no widget at that position");
    const auto* s = store_.find(node->scenario_id);
    if (!s || s->deleted) fail(ErrorCode::kNotFound, "widget refers to a missing scenario");
    if (!s->shared) fail(ErrorCode::kPrecondition, "only gallery scenarios can be spotlighted");
    const auto* rec = shared_response(*s);
    const auto& sp = suggestions_.spotlight(s->id, widget, rec ? rec->displayed() : std::string());
    record("spotlight", suggest::to_json(sp));
    broadcast(WireKind::kSpotlightEvent,
              {{"action", "spotlighted"}, {"spotlight", suggest::to_json(sp)}, {"scenario", scenario_view(*s, false)}});
    return;
  }

  if (action == "unspotlight") {
    const auto& sp = suggestions_.unspotlight(widget);
    record("spotlight", suggest::to_json(sp));
    broadcast(WireKind::kSpotlightEvent,
              {{"action", "unspotlighted"}, {"widget", doc::to_json(widget)}, {"editedText", sp.edited_text()}});
    return;
  }

  if (action == "edit") {
    auto op = op_field(body);
    if (op.id.replica != client) fail(ErrorCode::kMalformedOp, "op replica must be the sending client's id");
    std::string reason;
    switch (suggestions_.apply_edit(widget, op, &reason)) {
      case doc::ApplyOutcome::kApplied:
        record("spotlight-op", {{"widget", doc::to_json(widget)}, {"op", doc::to_json(op)}});
        broadcast(WireKind::kSpotlightEvent,
                  {{"action", "edit"}, {"widget", doc::to_json(widget)}, {"op", doc::to_json(op)}, {"clientId", client}});
        break;
      case doc::ApplyOutcome::kDuplicate:
        break;
      case doc::ApplyOutcome::kRejected:
        fail(ErrorCode::kMalformedOp, reason.empty() ? "edit rejected" : reason);
    }
    return;
  }

  if (action == "save") {
    const auto draft = suggestions_.begin_save(widget);
    const auto& rec = store_.save_human_edit(draft.scenario_id, draft.edited, draft.original);
    suggestions_.mark_saved(widget, draft.edited);
    record_scenario(draft.scenario_id);
    record("spotlight", suggest::to_json(*suggestions_.find_spotlight(widget)));
    broadcast(WireKind::kScenarioEvent,
              {{"action", "response-edited"}, {"scenarioId", draft.scenario_id}, {"response", response_json(rec)}});
    broadcast(WireKind::kSpotlightEvent, {{"action", "saved"}, {"widget", doc::to_json(widget)}});

    auto req = suggest::make_suggestion_request(policy::extract_policy_text(doc_.materialize()), heuristics_locked(),
                                                store_.get(draft.scenario_id), draft.original, draft.edited);
    std::string statement;
    std::string error;
    unlocked(lock, [&] {
      try {
        statement = suggest::parse_suggestion(gateway_.dispatch_json(req));
      } catch (const Error& e) {
        error = e.what();
      }
      return 0;
    });
    if (!error.empty()) {
      broadcast(WireKind::kSuggestionEvent, {{"action", "failed"},
                                             {"scenarioId", draft.scenario_id},
                                             {"widget", doc::to_json(widget)},
                                             {"message", "response saved; no suggestion: " + error}});
      return;
    }
    const auto& sg = suggestions_.add(draft, std::move(statement));
    record("suggestion", suggest::to_json(sg));
    broadcast(WireKind::kSuggestionEvent, {{"action", "proposed"}, {"suggestion", suggest::to_json(sg)}});
    return;
  }

  fail(ErrorCode::kProtocolViolation, "unknown spotlight action '" + action + "'");
}

void Session::on_suggestion(ConnectionId, const std::string&, const json& body) {
  const auto action = str_field(body, "action");
  if (action != "resolve") fail(ErrorCode::kProtocolViolation, "unknown suggestion action '" + action + "'");
  const auto decision_name = str_field(body, "decision");
  if (decision_name != "accept" && decision_name != "reject") {
    fail(ErrorCode::kProtocolViolation, "decision must be accept or reject");
  }
  const auto decision = decision_name == "accept" ? suggest::Decision::kAccept : suggest::Decision::kReject;
  const auto& sg = suggestions_.resolve(str_field(body, "suggestionId"), decision);
  if (decision == suggest::Decision::kAccept) emit_ops(suggest::accept_ops(doc_, sg.anchor, sg.statement, sg.id));
  record("suggestion", suggest::to_json(sg));
  broadcast(WireKind::kSuggestionEvent,
            {{"action", decision == suggest::Decision::kAccept ? "accepted" : "rejected"},
             {"suggestion", suggest::to_json(sg)}});
}

// --- versions and heuristics -------------------------------------------------------

policy::HeuristicSet Session::heuristics_locked() const {
  auto set = policy::extract_heuristics(doc_.materialize());
  const version::PolicyVersion* judged = nullptr;
  for (const auto& v : versions_.list()) {
    if (v.evaluated && v.state == version::VersionState::kComplete) judged = &v;
  }
  for (auto& h : set.items) {
    if (judged) {
      for (const auto& r : judged->results) {
        if (r.heuristic_id == h.id) h.machine = r.status;
      }
    }
    if (auto it = overrides_.find(h.id); it != overrides_.end()) h.override_ = it->second;
  }
  return set;
}

void Session::on_version(ConnectionId conn, const std::string& client, const json& body,
                         std::unique_lock<std::mutex>& lock) {
  const auto action = str_field(body, "action");

  if (action == "snapshot") {
    start_snapshot(conn, client);
  } else if (action == "override") {
    const auto id = str_field(body, "heuristicId");
    auto set = heuristics_locked();
    if (!set.find(id)) fail(ErrorCode::kUnknownHeuristic, "unknown heuristic id '" + id + "'");
    const auto& status = field(body, "status");
    json rec = {{"heuristicId", id}, {"override", nullptr}};
    if (status.is_null()) {
      overrides_.erase(id);
    } else {
      if (!status.is_string()) fail(ErrorCode::kProtocolViolation, "status must be a string or null");
      policy::Override o{policy::heuristic_status_from_string(status.get<std::string>()), client, options_.clock()};
      overrides_[id] = o;
      rec["override"] = policy::to_json(o);
    }
    record("override", rec);
    broadcast(WireKind::kVersionEvent,
              {{"action", "override"}, {"heuristicId", id}, {"override", rec["override"]},
               {"heuristics", heuristics_json(heuristics_locked())}});
  } else if (action == "heuristic") {
    edit_heuristic(client, field(body, "change"), conn);
  } else if (action == "evaluate") {
    const auto& v = field(body, "version");
    if (!v.is_number_integer()) fail(ErrorCode::kProtocolViolation, "version must be an integer");
    evaluate_version(conn, v.get<int>(), lock);
  } else if (action == "list") {
    json list = json::array();
    for (const auto& v : versions_.list()) list.push_back(version::to_json(v));
    send_private(conn, WireKind::kVersionEvent, {{"action", "list"}, {"versions", list}});
  } else if (action == "response") {
    const auto& s = visible_scenario(client, body);
    const auto version = str_field(body, "version");
    auto rec = version::get_response(store_, versions_, s.id, version);
    // Another client's sidebar result is not theirs to read.
    if (rec && s.shared && version == scenario::kWorkingVersion &&
        rec->provenance == scenario::Provenance::kGenerated) {
      rec.reset();
    }
    json reply = {{"action", "response"}, {"scenarioId", s.id}, {"version", version}, {"response", nullptr}};
    if (rec) reply["response"] = response_json(*rec);
    if (auto it = s.failures.find(version); it != s.failures.end()) reply["failure"] = it->second;
    send_private(conn, WireKind::kVersionEvent, std::move(reply));
  } else {
    fail(ErrorCode::kProtocolViolation, "unknown version action '" + action + "'");
  }
}

void Session::start_snapshot(ConnectionId conn, const std::string&) {
  if (snapshot_running_) fail(ErrorCode::kBusy, "a snapshot is already running");
  const auto frozen = policy::extract_policy_text(doc_.materialize());
  const auto* latest = versions_.latest();
  if (latest && latest->frozen == frozen) {
    send_private(conn, WireKind::kVersionEvent,
                 {{"action", "notice"},
                  {"message", "policy unchanged since version " + std::to_string(latest->id) + "; no snapshot taken"}});
    return;
  }
  // Copied now: append below may reallocate the history.
  std::optional<version::PolicyVersion> previous;
  if (latest) previous = *latest;
  const auto set = heuristics_locked();
  version::PolicyVersion pv;
  pv.id = versions_.next_id();
  pv.frozen = frozen;
  pv.title = std::string(version::kPendingTitle);
  pv.results = version::pending_results(set);
  pv.created = options_.clock();
  if (previous) pv.diff_basis = previous->id;
  pv.state = version::VersionState::kPending;
  pv.evaluated = false;
  const auto& v = versions_.append(std::move(pv));
  record_version(v.id);
  broadcast(WireKind::kVersionEvent, {{"action", "pending"}, {"version", version::to_json(v)}});

  version::SnapshotJob job;
  job.version = v.id;
  job.frozen = frozen;
  if (previous) {
    job.previous = previous->frozen;
    job.previous_id = previous->id;
  }
  job.heuristics = set;
  for (const auto* s : store_.gallery()) job.gallery.push_back(*s);
  job.scaffold = gateway_.config().scaffold;

  snapshot_running_ = true;
  if (snapshot_thread_.joinable()) snapshot_thread_.join();  // finished; it only clears the flag last
  snapshot_thread_ = std::thread(&Session::run_snapshot_job, this, std::move(job));
}

void Session::run_snapshot_job(version::SnapshotJob job) {
  version::SnapshotOutcome out;
  try {
    out = version::run_snapshot(job, gateway_);
  } catch (const std::exception& e) {
    out.title = "Version " + std::to_string(job.version);
    for (const auto& s : job.gallery) out.failures[s.id] = e.what();
    for (const auto& h : job.heuristics.items) {
      out.results.push_back({h.id, h.text, policy::HeuristicStatus::kUnevaluated,
                             std::string("evaluation failed: ") + e.what()});
    }
  }

  std::lock_guard lock(mu_);
  const auto vid = std::to_string(job.version);
  for (const auto& s : job.gallery) {
    if (auto it = out.responses.find(s.id); it != out.responses.end()) {
      store_.commit_response(s.id, vid, it->second);
      store_.clear_working(s.id);
    } else {
      auto f = out.failures.find(s.id);
      store_.record_failure(s.id, vid, f != out.failures.end() ? f->second : "no response");
    }
    record_scenario(s.id);
    const auto& now = store_.get(s.id);
    scenario_event(now, {{"action", "updated"}, {"scenario", scenario_view(now, false)}});
  }
  const auto& v = versions_.finalize(job.version, out.title, out.results);
  record_version(v.id);
  broadcast(WireKind::kVersionEvent, {{"action", "final"}, {"version", version::to_json(v)}});
  snapshot_running_ = false;
  snapshot_done_.notify_all();
}

void Session::evaluate_version(ConnectionId conn, int id, std::unique_lock<std::mutex>& lock) {
  const auto& v = versions_.get(id);
  if (v.state == version::VersionState::kPending) fail(ErrorCode::kBusy, "version is still being snapshotted");
  if (v.evaluated) {
    send_private(conn, WireKind::kVersionEvent, {{"action", "evaluated"}, {"version", version::to_json(v)}});
    return;
  }
  policy::HeuristicSet set;
  for (const auto& r : v.results) set.items.push_back({r.heuristic_id, r.text, policy::HeuristicStatus::kUnevaluated, {}});
  std::vector<version::HeuristicResult> results;
  if (!set.items.empty()) {
    const auto frozen = v.frozen;
    results = unlocked(lock, [&] { return version::evaluate_heuristics(frozen, set, gateway_); });
  }
  const auto& done = versions_.set_results(id, std::move(results));
  record_version(id);
  broadcast(WireKind::kVersionEvent, {{"action", "evaluated"}, {"version", version::to_json(done)}});
}

void Session::edit_heuristic(const std::string&, const json& change, ConnectionId) {
  const auto kind = str_field(change, "kind");
  const auto nodes = doc_.materialize();
  const auto blocks = policy::parse_blocks(nodes);

  auto code_points = [](const std::string& s) {
    std::vector<doc::DocNode> out;
    for (auto& cp : text::split_code_points(s)) out.push_back(doc::DocNode::text_run(std::move(cp)));
    return out;
  };
  // Live (non-synthetic) node index of materialized index `i`.
  auto live_index = [&](std::size_t i) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < i; ++k) n += nodes[k].synthetic ? 0 : 1;
    return n;
  };
  auto find_item = [&](const std::string& id) -> const policy::Block& {
    for (const auto& b : blocks) {
      if (b.kind == policy::BlockKind::kListItem && b.in_heuristics && !b.in_draft && b.marker.to_string() == id) {
        return b;
      }
    }
    fail(ErrorCode::kUnknownHeuristic, "unknown heuristic id '" + id + "'");
  };
  auto erase_range = [&](std::size_t first, std::size_t last) {
    std::vector<doc::DocOp> ops;
    for (std::size_t i = last + 1; i-- > first;) {
      if (!nodes[i].synthetic) ops.push_back(doc_.erase(live_index(i)));
    }
    return ops;
  };

  std::vector<doc::DocOp> ops;
  json event = {{"action", "heuristics"}, {"kind", kind}};
  if (kind == "add") {
    const auto text = std::string(text::trim(str_field(change, "text")));
    if (text.empty()) fail(ErrorCode::kEmptyText, "heuristic text is empty");
    std::vector<doc::DocNode> run;
    std::optional<doc::PositionId> after;
    bool seen_heading = false;
    for (const auto& b : blocks) {
      if (b.kind == policy::BlockKind::kHeading && b.level == 1 && b.in_heuristics) {
        if (seen_heading) break;
        seen_heading = true;
      } else if (seen_heading && !b.in_heuristics) {
        break;
      }
      if (seen_heading) after = nodes[b.last_node].id;
    }
    if (!after) {
      run.push_back(doc::DocNode::heading(1));
      for (auto& n : code_points(std::string(policy::kHeuristicsHeading))) run.push_back(std::move(n));
      run.push_back(doc::DocNode::text_run("\n"));
      after = doc::PositionId::begin();
    }
    const auto marker_at = run.size();
    run.push_back(doc::DocNode::list_item());
    for (auto& n : code_points(text)) run.push_back(std::move(n));
    run.push_back(doc::DocNode::text_run("\n"));
    ops = doc_.insert_run_after(*after, run);
    event["id"] = ops[marker_at].target.to_string();
  } else if (kind == "remove") {
    const auto id = str_field(change, "id");
    const auto& b = find_item(id);
    ops = erase_range(b.first_node, b.last_node);
    event["id"] = id;
  } else if (kind == "retext") {
    const auto id = str_field(change, "id");
    const auto text = std::string(text::trim(str_field(change, "text")));
    if (text.empty()) fail(ErrorCode::kEmptyText, "heuristic text is empty");
    const auto& b = find_item(id);
    const auto marker = b.marker;
    if (b.last_node > b.first_node) ops = erase_range(b.first_node + 1, b.last_node);
    auto run = code_points(text);
    run.push_back(doc::DocNode::text_run("\n"));
    for (auto& op : doc_.insert_run_after(marker, run)) ops.push_back(std::move(op));
    event["id"] = id;
  } else {
    fail(ErrorCode::kProtocolViolation, "unknown heuristic change '" + kind + "'");
  }
  emit_ops(ops);
  event["heuristics"] = heuristics_json(heuristics_locked());
  broadcast(WireKind::kVersionEvent, std::move(event));
}

// --- delivery ----------------------------------------------------------------------

void Session::broadcast(WireKind kind, json body) {
  WireMessage m{++seq_, kind, std::move(body)};
  for (auto& [conn, c] : connections_) {
    if (c.client) c.channel->send(m);
  }
  history_.push_back(std::move(m));
  while (history_.size() > options_.replay_window) history_.pop_front();
}

void Session::send_private(ConnectionId conn, WireKind kind, json body) {
  auto it = connections_.find(conn);
  if (it == connections_.end()) return;
  it->second.channel->send(WireMessage{std::nullopt, kind, std::move(body)});
}

void Session::send_to_client(const std::string& client, WireKind kind, json body) {
  for (auto& [conn, c] : connections_) {
    if (c.client == client) {
      c.channel->send(WireMessage{std::nullopt, kind, body});
    }
  }
}

// --- views ----------------------------------------------------------------------------

json Session::full_state_for(const std::string& client) const {
  json scenarios = json::array();
  for (const auto* s : store_.all()) {
    if (s->shared) {
      scenarios.push_back(scenario_view(*s, false));
    } else if (s->owner == client) {
      scenarios.push_back(scenario_view(*s, true));
    }
  }
  json versions = json::array();
  for (const auto& v : versions_.list()) versions.push_back(version::to_json(v));
  json spotlights = json::array();
  for (const auto& [_, sp] : suggestions_.spotlights()) spotlights.push_back(suggest::to_json(sp));
  json suggestions = json::array();
  for (const auto& [_, sg] : suggestions_.suggestions()) suggestions.push_back(suggest::to_json(sg));
  json clients = json::array();
  for (const auto& [id, c] : clients_) {
    clients.push_back({{"clientId", id}, {"displayName", c.display_name}, {"cursor", c.cursor}});
  }
  return {{"sessionId", id_},
          {"clientId", client},
          {"doc", doc::to_json(doc_.state())},
          {"scenarios", scenarios},
          {"versions", versions},
          {"heuristics", heuristics_json(heuristics_locked())},
          {"spotlights", spotlights},
          {"suggestions", suggestions},
          {"clients", clients}};
}

std::vector<doc::MaterializedNode> Session::materialize() const {
  std::lock_guard lock(mu_);
  return doc_.materialize();
}

doc::DocState Session::doc_state() const {
  std::lock_guard lock(mu_);
  return doc_.state();
}

policy::PolicyText Session::policy_text() const {
  std::lock_guard lock(mu_);
  return policy::extract_policy_text(doc_.materialize());
}

policy::HeuristicSet Session::heuristics() const {
  std::lock_guard lock(mu_);
  return heuristics_locked();
}

std::vector<scenario::Scenario> Session::scenarios() const {
  std::lock_guard lock(mu_);
  std::vector<scenario::Scenario> out;
  for (const auto* s : store_.all()) out.push_back(*s);
  return out;
}

std::vector<version::PolicyVersion> Session::versions() const {
  std::lock_guard lock(mu_);
  return versions_.list();
}

std::vector<suggest::Suggestion> Session::suggestions() const {
  std::lock_guard lock(mu_);
  std::vector<suggest::Suggestion> out;
  for (const auto& [_, s] : suggestions_.suggestions()) out.push_back(s);
  return out;
}

std::vector<ClientInfo> Session::clients() const {
  std::lock_guard lock(mu_);
  std::vector<ClientInfo> out;
  for (const auto& [_, c] : clients_) out.push_back(c);
  return out;
}

std::uint64_t Session::seq() const {
  std::lock_guard lock(mu_);
  return seq_;
}

json Session::export_bundle() const {
  std::lock_guard lock(mu_);
  const auto live = policy::extract_policy_text(doc_.materialize());
  json versions = json::array();
  for (const auto& v : versions_.list()) {
    auto j = version::to_json(v);
    json responses = json::object();
    for (const auto* s : store_.all()) {
      if (!s->shared) continue;
      if (auto it = s->responses.find(std::to_string(v.id)); it != s->responses.end()) {
        responses[s->id] = it->second.displayed();
      }
    }
    j["responses"] = std::move(responses);
    versions.push_back(std::move(j));
  }
  json gallery = json::array();
  for (const auto* s : store_.gallery()) gallery.push_back(scenario_view(*s, false));
  return {{"sessionId", id_},
          {"policy", policy::to_json(live)},
          {"heuristics", heuristics_json(heuristics_locked())},
          {"versions", versions},
          {"gallery", gallery}};
}

// --- persistence ------------------------------------------------------------------------

json Session::state_json(bool compact_doc) const {
  auto doc = doc_.state();
  if (compact_doc) doc.compact();
  json scenarios = json::array();
  for (const auto* s : store_.all()) scenarios.push_back(scenario::to_json(*s));
  json versions = json::array();
  for (const auto& v : versions_.list()) versions.push_back(version::to_json(v));
  json overrides = json::object();
  for (const auto& [id, o] : overrides_) overrides[id] = policy::to_json(o);
  json spotlights = json::array();
  for (const auto& [_, sp] : suggestions_.spotlights()) spotlights.push_back(suggest::to_json(sp));
  json suggestions = json::array();
  for (const auto& [_, sg] : suggestions_.suggestions()) suggestions.push_back(suggest::to_json(sg));
  return {{"seq", seq_},
          {"doc", doc::to_json(doc)},
          {"scenarios", scenarios},
          {"versions", versions},
          {"overrides", overrides},
          {"spotlights", spotlights},
          {"suggestions", suggestions}};
}

void Session::load_state(const json& state) {
  seq_ = state.at("seq").get<std::uint64_t>();
  doc_ = doc::Replica(std::string(kServerReplica), doc::doc_state_from_json(state.at("doc")));
  for (const auto& s : state.at("scenarios")) store_.put(scenario::scenario_from_json(s));
  for (const auto& v : state.at("versions")) versions_.put(version::version_from_json(v));
  for (const auto& [id, o] : state.at("overrides").items()) overrides_[id] = policy::override_from_json(o);
  for (const auto& sp : state.at("spotlights")) suggestions_.put(suggest::spotlight_from_json(sp));
  for (const auto& sg : state.at("suggestions")) suggestions_.put(suggest::suggestion_from_json(sg));
}

void Session::apply_record(const LogRecord& r) {
  seq_ = std::max(seq_, r.seq);
  if (r.type == "doc-op") {
    doc_.receive(doc::op_from_json(r.data));
  } else if (r.type == "scenario") {
    store_.put(scenario::scenario_from_json(r.data));
  } else if (r.type == "version") {
    versions_.put(version::version_from_json(r.data));
  } else if (r.type == "override") {
    const auto id = r.data.at("heuristicId").get<std::string>();
    if (r.data.at("override").is_null()) {
      overrides_.erase(id);
    } else {
      overrides_[id] = policy::override_from_json(r.data["override"]);
    }
  } else if (r.type == "spotlight") {
    suggestions_.put(suggest::spotlight_from_json(r.data));
  } else if (r.type == "spotlight-op") {
    suggestions_.apply_edit(doc::position_from_json(r.data.at("widget")), doc::op_from_json(r.data.at("op")));
  } else if (r.type == "suggestion") {
    suggestions_.put(suggest::suggestion_from_json(r.data));
  } else {
    fail(ErrorCode::kCorruptLog, "unknown record type '" + r.type + "' at lsn " + std::to_string(r.lsn));
  }
}

void Session::record(std::string type, json data) {
  if (!log_) return;
  if (log_->append(std::move(type), seq_, std::move(data))) log_->write_snapshot(state_json(true));
}

void Session::record_scenario(const std::string& id) { record("scenario", scenario::to_json(store_.get(id))); }

void Session::record_version(int id) {
  const auto& v = versions_.get(id);
  record("version", version::to_json(v));
  if (!log_) return;
  auto j = version::to_json(v);
  json responses = json::object();
  for (const auto* s : store_.all()) {
    if (auto it = s->responses.find(std::to_string(id)); it != s->responses.end()) responses[s->id] = it->second.text;
  }
  j["responses"] = std::move(responses);
  log_->write_version(id, j);
}

}  // namespace ppad::collab

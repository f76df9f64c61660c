#include "policypad/collab/client_replica.hpp"

#include "policypad/core/errors.hpp"
#include "policypad/doc/codec.hpp"

namespace ppad::collab {

using nlohmann::json;

namespace {

// Placeholder identity until the server assigns one in its hello reply.
constexpr const char* kUnassigned = "unassigned";

}  // namespace

ClientReplica::ClientReplica(std::string display_name, Sender send)
    : display_name_(std::move(display_name)), send_(std::move(send)), replica_(kUnassigned) {}

void ClientReplica::connect(bool resume) {
  json body = {{"displayName", display_name_}};
  if (!client_id_.empty()) body["clientId"] = client_id_;
  if (resume) body["lastSeq"] = last_seq_;
  synced_ = false;
  resync_pending_ = true;  // the hello reply is followed by a resync
  buffered_.clear();
  send_(WireMessage{std::nullopt, WireKind::kHello, std::move(body)});
}

void ClientReplica::connect_as(std::string client_id, bool resume) {
  client_id_ = std::move(client_id);
  replica_ = doc::Replica(client_id_, replica_.state());
  connect(resume);
}

void ClientReplica::receive(const WireMessage& m) {
  if (!m.seq) {
    apply(m);
    return;
  }
  if (!synced_) {
    // Broadcasts racing ahead of the resync reply; keep them for later.
    buffered_.emplace(*m.seq, m);
    return;
  }
  if (*m.seq <= last_seq_) return;  // already seen
  if (*m.seq != last_seq_ + 1) {
    buffered_.emplace(*m.seq, m);
    if (!resync_pending_) {
      resync_pending_ = true;
      ++gap_resyncs_;
      send_(WireMessage{std::nullopt, WireKind::kResync, {{"lastSeq", last_seq_}}});
    }
    return;
  }
  apply_sequenced(m);
  drain();
}

void ClientReplica::apply_sequenced(const WireMessage& m) {
  apply(m);
  last_seq_ = *m.seq;
}

void ClientReplica::drain() {
  while (!buffered_.empty()) {
    auto it = buffered_.begin();
    if (it->first <= last_seq_) {
      buffered_.erase(it);
      continue;
    }
    if (it->first != last_seq_ + 1) break;
    auto m = std::move(it->second);
    buffered_.erase(it);
    apply_sequenced(m);
  }
}

void ClientReplica::load_full(const json& state) {
  ++full_resyncs_;
  replica_ = doc::Replica(client_id_.empty() ? std::string(kUnassigned) : client_id_,
                          doc::doc_state_from_json(state.at("doc")));
  scenarios_.clear();
  for (const auto& s : state.at("scenarios")) scenarios_[s.at("id").get<std::string>()] = s;
  versions_.clear();
  for (const auto& v : state.at("versions")) versions_[v.at("id").get<int>()] = v;
  suggestions_.clear();
  for (const auto& s : state.at("suggestions")) suggestions_[s.at("id").get<std::string>()] = s;
  cards_.clear();
  for (const auto& sp : state.at("spotlights")) {
    cards_[doc::position_from_json(sp.at("widget"))] =
        Card{doc::doc_state_from_json(sp.at("subdoc")), sp.at("active").get<bool>(), sp.at("scenarioId")};
  }
  heuristics_ = state.at("heuristics");
  presence_.clear();
  for (const auto& c : state.at("clients")) presence_[c.at("clientId").get<std::string>()] = c;
}

void ClientReplica::apply(const WireMessage& m) {
  const auto& b = m.body;
  const std::string action = b.value("action", "");
  switch (m.kind) {
    case WireKind::kHello:
      client_id_ = b.at("clientId").get<std::string>();
      replica_ = doc::Replica(client_id_, replica_.state());
      break;
    case WireKind::kResync: {
      const auto seq = b.at("seq").get<std::uint64_t>();
      if (b.at("mode") == "full") {
        load_full(b.at("state"));
        last_seq_ = seq;
      } else {
        for (const auto& f : b.at("messages")) {
          auto msg = wire_from_json(f);
          if (*msg.seq == last_seq_ + 1) apply_sequenced(msg);
        }
      }
      synced_ = true;
      resync_pending_ = false;
      drain();
      break;
    }
    case WireKind::kPresence: {
      const auto id = b.at("clientId").get<std::string>();
      if (action == "left") {
        presence_.erase(id);
      } else {
        auto& p = presence_[id];
        for (const auto& [k, v] : b.items()) p[k] = v;
      }
      break;
    }
    case WireKind::kDocOp:
      replica_.receive(doc::op_from_json(b.at("op")));
      break;
    case WireKind::kScenarioEvent:
      if (action == "created" || action == "published" || action == "extended" || action == "updated") {
        const auto& s = b.at("scenario");
        scenarios_[s.at("id").get<std::string>()] = s;
      } else if (action == "flagged") {
        scenarios_[b.at("scenarioId").get<std::string>()]["flag"] = b.at("flag");
      } else if (action == "unflagged") {
        scenarios_[b.at("scenarioId").get<std::string>()].erase("flag");
      } else if (action == "deleted") {
        scenarios_[b.at("scenarioId").get<std::string>()]["deleted"] = true;
      } else if (action == "regenerated") {
        sidebar_[b.at("scenarioId").get<std::string>()] = b.at("response");
      } else if (action == "response-edited" || action == "toggled") {
        const auto& r = b.at("response");
        scenarios_[b.at("scenarioId").get<std::string>()]["responses"][r.at("version").get<std::string>()] = r;
      }
      break;
    case WireKind::kSpotlightEvent: {
      if (action == "spotlighted") {
        const auto& sp = b.at("spotlight");
        cards_[doc::position_from_json(sp.at("widget"))] =
            Card{doc::doc_state_from_json(sp.at("subdoc")), true, sp.at("scenarioId")};
        break;
      }
      auto it = cards_.find(doc::position_from_json(b.at("widget")));
      if (it == cards_.end()) break;
      if (action == "edit") {
        it->second.subdoc.apply(doc::op_from_json(b.at("op")));
      } else if (action == "unspotlighted") {
        it->second.active = false;
      }
      break;
    }
    case WireKind::kVersionEvent:
      if (b.contains("version")) {
        const auto& v = b.at("version");
        if (v.is_object()) versions_[v.at("id").get<int>()] = v;
      }
      if (action == "list") {
        for (const auto& v : b.at("versions")) versions_[v.at("id").get<int>()] = v;
      }
      if (b.contains("heuristics")) heuristics_ = b.at("heuristics");
      if (action == "notice") notices_.push_back(b);
      break;
    case WireKind::kSuggestionEvent:
      if (b.contains("suggestion")) {
        const auto& s = b.at("suggestion");
        suggestions_[s.at("id").get<std::string>()] = s;
      } else {
        notices_.push_back(b);
      }
      break;
    case WireKind::kError:
      errors_.push_back(b);
      break;
  }
}

std::optional<std::size_t> ClientReplica::index_of(const doc::PositionId& id) const {
  std::size_t i = 0;
  for (const auto& n : replica_.materialize()) {
    if (n.synthetic) continue;
    if (n.id == id) return i;
    ++i;
  }
  return std::nullopt;
}

void ClientReplica::send_op(WireKind kind, const doc::DocOp& op, const json* widget) {
  json body = {{"op", doc::to_json(op)}};
  if (widget) {
    body["action"] = "edit";
    body["widget"] = *widget;
  }
  send_(WireMessage{std::nullopt, kind, std::move(body)});
}

void ClientReplica::insert_text(std::size_t index, std::string_view text) {
  for (const auto& op : replica_.insert_text(index, text)) send_op(WireKind::kDocOp, op);
}

void ClientReplica::insert_node(std::size_t index, doc::DocNode node) {
  send_op(WireKind::kDocOp, replica_.insert(index, std::move(node)));
}

void ClientReplica::erase(std::size_t index) { send_op(WireKind::kDocOp, replica_.erase(index)); }

void ClientReplica::spotlight_insert(const doc::PositionId& widget, std::size_t index, std::string_view text) {
  auto it = cards_.find(widget);
  if (it == cards_.end()) fail(ErrorCode::kNotFound, "no spotlight card for that widget");
  doc::Replica local(client_id_, it->second.subdoc);
  const auto w = doc::to_json(widget);
  for (const auto& op : local.insert_text(index, text)) send_op(WireKind::kSpotlightEvent, op, &w);
  it->second.subdoc = local.state();
}

void ClientReplica::spotlight_erase(const doc::PositionId& widget, std::size_t index) {
  auto it = cards_.find(widget);
  if (it == cards_.end()) fail(ErrorCode::kNotFound, "no spotlight card for that widget");
  doc::Replica local(client_id_, it->second.subdoc);
  const auto w = doc::to_json(widget);
  send_op(WireKind::kSpotlightEvent, local.erase(index), &w);
  it->second.subdoc = local.state();
}

void ClientReplica::send_action(WireKind kind, json body) {
  send_(WireMessage{std::nullopt, kind, std::move(body)});
}

void ClientReplica::heartbeat() {
  send_(WireMessage{std::nullopt, WireKind::kPresence, {{"heartbeat", true}, {"ack", last_seq_}}});
}

std::string ClientReplica::spotlight_text(const doc::PositionId& widget) const {
  auto it = cards_.find(widget);
  return it == cards_.end() ? std::string() : doc::plain_text(it->second.subdoc.materialize());
}

bool ClientReplica::spotlight_active(const doc::PositionId& widget) const {
  auto it = cards_.find(widget);
  return it != cards_.end() && it->second.active;
}

}  // namespace ppad::collab

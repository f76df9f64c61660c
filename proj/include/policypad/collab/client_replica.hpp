#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/collab/wire.hpp"
#include "policypad/doc/replica.hpp"

namespace ppad::collab {

// Client side of the wire protocol, as the web client implements it:
// applies broadcast frames strictly in seq order, buffers frames that
// arrive after a gap and asks for a resync, echoes local edits immediately
// and ships them as ops. Used by tests as a stand-in browser.
class ClientReplica {
 public:
  using Sender = std::function<void(const WireMessage&)>;

  ClientReplica(std::string display_name, Sender send);

  // Sends hello; `resume` asks the server to replay from last_seq().
  void connect(bool resume = false);
  // Reconnects under an identity from an earlier connection, e.g. after
  // the server restarted.
  void connect_as(std::string client_id, bool resume = false);
  void receive(const WireMessage& m);
  void receive_frame(std::string_view frame) { receive(parse_wire(frame)); }

  // Local document edits (applied now, sent as doc-op frames).
  void insert_text(std::size_t index, std::string_view text);
  void insert_node(std::size_t index, doc::DocNode node);
  void erase(std::size_t index);
  // Spotlight card edits, same contract against the card's sub-document.
  void spotlight_insert(const doc::PositionId& widget, std::size_t index, std::string_view text);
  void spotlight_erase(const doc::PositionId& widget, std::size_t index);

  // Any other client action: {"action":..., ...}.
  void send_action(WireKind kind, nlohmann::json body);
  void heartbeat();

  const std::string& client_id() const { return client_id_; }
  std::uint64_t last_seq() const { return last_seq_; }
  bool connected() const { return !client_id_.empty(); }
  std::vector<doc::MaterializedNode> materialize() const { return replica_.materialize(); }
  const doc::DocState& doc() const { return replica_.state(); }
  // Index of the first live node with `id`, or nullopt.
  std::optional<std::size_t> index_of(const doc::PositionId& id) const;

  const std::map<std::string, nlohmann::json>& scenarios() const { return scenarios_; }
  const std::map<std::string, nlohmann::json>& sidebar() const { return sidebar_; }
  const std::map<int, nlohmann::json>& versions() const { return versions_; }
  const std::map<std::string, nlohmann::json>& suggestions() const { return suggestions_; }
  const nlohmann::json& heuristics() const { return heuristics_; }
  std::string spotlight_text(const doc::PositionId& widget) const;
  bool spotlight_active(const doc::PositionId& widget) const;
  const std::vector<nlohmann::json>& errors() const { return errors_; }
  const std::vector<nlohmann::json>& notices() const { return notices_; }
  std::size_t gap_resyncs() const { return gap_resyncs_; }
  std::size_t full_resyncs() const { return full_resyncs_; }

 private:
  void apply(const WireMessage& m);
  void apply_sequenced(const WireMessage& m);
  void drain();
  void load_full(const nlohmann::json& state);
  void send_op(WireKind kind, const doc::DocOp& op, const nlohmann::json* widget = nullptr);

  struct Card {
    doc::DocState subdoc;
    bool active = true;
    std::string scenario_id;
  };

  std::string display_name_;
  Sender send_;
  std::string client_id_;
  doc::Replica replica_;
  std::uint64_t last_seq_ = 0;
  bool synced_ = false;  // full state or replay received since hello
  bool resync_pending_ = false;
  std::map<std::uint64_t, WireMessage> buffered_;

  std::map<std::string, nlohmann::json> scenarios_;
  std::map<std::string, nlohmann::json> sidebar_;  // private working responses by scenario
  std::map<int, nlohmann::json> versions_;
  std::map<std::string, nlohmann::json> suggestions_;
  std::map<doc::PositionId, Card> cards_;
  std::map<std::string, nlohmann::json> presence_;
  nlohmann::json heuristics_ = nlohmann::json::array();
  std::vector<nlohmann::json> errors_;
  std::vector<nlohmann::json> notices_;
  std::size_t gap_resyncs_ = 0;
  std::size_t full_resyncs_ = 0;
};

}  // namespace ppad::collab

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/collab/persistence.hpp"
#include "policypad/collab/seed.hpp"
#include "policypad/collab/wire.hpp"
#include "policypad/doc/replica.hpp"
#include "policypad/llm/gateway.hpp"
#include "policypad/policy/heuristics.hpp"
#include "policypad/policy/policy_text.hpp"
#include "policypad/scenario/store.hpp"
#include "policypad/suggest/suggestion_engine.hpp"
#include "policypad/version/version.hpp"

namespace ppad::collab {

// Replica id the session uses for the ops it originates itself (seeding,
// accepted suggestions, heuristic edits, widget flag updates).
inline constexpr std::string_view kServerReplica = "server";

struct SessionOptions {
  Clock clock = system_clock();
  // When set, every state change is appended to an event log there.
  std::optional<std::filesystem::path> data_dir;
  std::size_t compact_every = kDefaultCompactionThreshold;
  // Broadcast frames kept in memory for replay to reconnecting clients.
  std::size_t replay_window = 10000;
  Timestamp heartbeat_ms = 10000;
  int missed_heartbeats = 3;
};

using ConnectionId = std::uint64_t;

struct ClientInfo {
  std::string id;
  std::string display_name;
  nlohmann::json cursor;
  Timestamp last_seen = 0;
  std::uint64_t acked = 0;
};

// One live collaborative session. All state changes are serialized by a
// single mutex; gateway calls run with the mutex released and commit their
// results when they come back. Broadcast frames get a session-monotonic seq
// and are sent to every joined client while the mutex is held, so all
// clients see them in one order. Private frames (sidebar results, unshared
// scenarios, replies) go to one client and carry no seq.
class Session {
 public:
  static std::unique_ptr<Session> create(std::string id, const Seed& seed, llm::LlmGateway& gateway,
                                         SessionOptions options = {});
  // Rebuilds a session from its data directory (snapshot + log tail).
  static std::unique_ptr<Session> restore(const std::filesystem::path& dir, llm::LlmGateway& gateway,
                                          SessionOptions options = {});

  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }

  ConnectionId attach(std::shared_ptr<ClientChannel> channel);
  void detach(ConnectionId conn);
  // Entry point for client frames. Protocol violations answer with an error
  // frame and close the channel; domain errors answer with an error frame.
  void handle_frame(ConnectionId conn, std::string_view frame);
  void handle(ConnectionId conn, const WireMessage& msg);
  // Drops clients silent for missed_heartbeats * heartbeat_ms.
  void tick();
  // Blocks until background snapshot work has finished.
  void wait_idle();

  // Read-only views, each taken under the lock.
  std::vector<doc::MaterializedNode> materialize() const;
  doc::DocState doc_state() const;
  policy::PolicyText policy_text() const;
  policy::HeuristicSet heuristics() const;
  std::vector<scenario::Scenario> scenarios() const;
  std::vector<version::PolicyVersion> versions() const;
  std::vector<suggest::Suggestion> suggestions() const;
  std::vector<ClientInfo> clients() const;
  std::uint64_t seq() const;
  // Policy text, versions and gallery responses as one JSON document.
  nlohmann::json export_bundle() const;
  // Everything that persists: doc (tombstones kept), scenarios, versions,
  // overrides, spotlights, suggestions.
  nlohmann::json state_json(bool compact_doc = false) const;

 private:
  struct Connection {
    std::shared_ptr<ClientChannel> channel;
    std::optional<std::string> client;  // set by hello
  };

  Session(std::string id, llm::LlmGateway& gateway, SessionOptions options);

  // Message handlers; called with the lock held unless named *_unlocked.
  void on_hello(ConnectionId conn, const nlohmann::json& body, std::unique_lock<std::mutex>& lock);
  void on_presence(const std::string& client, const nlohmann::json& body);
  void on_resync(ConnectionId conn, const std::string& client, const nlohmann::json& body);
  void on_doc_op(ConnectionId conn, const std::string& client, const nlohmann::json& body);
  void on_scenario(ConnectionId conn, const std::string& client, const nlohmann::json& body,
                   std::unique_lock<std::mutex>& lock);
  void on_spotlight(ConnectionId conn, const std::string& client, const nlohmann::json& body,
                    std::unique_lock<std::mutex>& lock);
  void on_version(ConnectionId conn, const std::string& client, const nlohmann::json& body,
                  std::unique_lock<std::mutex>& lock);
  void on_suggestion(ConnectionId conn, const std::string& client, const nlohmann::json& body);

  void start_snapshot(ConnectionId conn, const std::string& client);
  void run_snapshot_job(version::SnapshotJob job);
  void evaluate_version(ConnectionId conn, int version, std::unique_lock<std::mutex>& lock);
  void edit_heuristic(const std::string& client, const nlohmann::json& change, ConnectionId conn);

  // State helpers.
  const scenario::Scenario& visible_scenario(const std::string& client, const nlohmann::json& body) const;
  nlohmann::json scenario_view(const scenario::Scenario& s, bool with_working) const;
  policy::HeuristicSet heuristics_locked() const;
  nlohmann::json full_state_for(const std::string& client) const;
  void resync_client(ConnectionId conn, const std::string& client, std::optional<std::uint64_t> last_seq);

  // Delivery. Broadcast assigns the next seq and keeps the frame for replay.
  void broadcast(WireKind kind, nlohmann::json body);
  void send_private(ConnectionId conn, WireKind kind, nlohmann::json body);
  void send_to_client(const std::string& client, WireKind kind, nlohmann::json body);
  // Scenario events go to everyone for gallery scenarios, else to the owner.
  void scenario_event(const scenario::Scenario& s, nlohmann::json body);
  void close_connection(ConnectionId conn, std::string_view reason);

  // Applies a server-originated op and broadcasts it.
  void emit_ops(const std::vector<doc::DocOp>& ops);

  // Persistence.
  void record(std::string type, nlohmann::json data);
  void record_scenario(const std::string& id);
  void record_version(int id);
  void apply_record(const LogRecord& r);
  void load_state(const nlohmann::json& state);

  std::string allocate_client_id();

  std::string id_;
  llm::LlmGateway& gateway_;
  SessionOptions options_;

  mutable std::mutex mu_;
  doc::Replica doc_;
  scenario::ScenarioStore store_;
  version::VersionHistory versions_;
  suggest::SuggestionEngine suggestions_;
  std::map<std::string, policy::Override> overrides_;

  std::uint64_t seq_ = 0;
  std::deque<WireMessage> history_;
  std::map<ConnectionId, Connection> connections_;
  std::map<std::string, ClientInfo> clients_;
  ConnectionId next_conn_ = 1;
  std::uint64_t next_client_ = 1;

  std::unique_ptr<EventLog> log_;
  bool snapshot_running_ = false;
  std::condition_variable snapshot_done_;
  std::thread snapshot_thread_;
};

}  // namespace ppad::collab

// In-process stand-ins for sockets: a capturing channel on the server side
// and a pump that shuttles frames between a Session and ClientReplicas.
#pragma once

#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "policypad/collab/client_replica.hpp"
#include "policypad/collab/session.hpp"
#include "policypad/llm/gateway.hpp"
#include "policypad/llm/mock_provider.hpp"

namespace ppad::testing {

struct CapturedFrame {
  std::string client;  // recipient display name
  collab::WireMessage message;
  std::string bytes;
};

// Records every frame the session sends to one connection.
class CaptureChannel : public collab::ClientChannel {
 public:
  void send(const collab::WireMessage& m) override {
    std::lock_guard lock(mu_);
    inbox_.push_back(m);
    log_.push_back(m);
  }
  void close(std::string_view reason) override {
    std::lock_guard lock(mu_);
    closed_ = true;
    close_reason_ = std::string(reason);
  }
  std::deque<collab::WireMessage> take() {
    std::lock_guard lock(mu_);
    return std::exchange(inbox_, {});
  }
  std::vector<collab::WireMessage> log() const {
    std::lock_guard lock(mu_);
    return log_;
  }
  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }

 private:
  mutable std::mutex mu_;
  std::deque<collab::WireMessage> inbox_;
  std::vector<collab::WireMessage> log_;
  bool closed_ = false;
  std::string close_reason_;
};

inline llm::LlmGateway& mock_gateway(std::shared_ptr<llm::MockProvider>* out = nullptr,
                                     llm::MockConfig config = {}) {
  // One gateway per call, kept alive for the whole test binary.
  static std::vector<std::unique_ptr<llm::LlmGateway>> keep;
  auto provider = std::make_shared<llm::MockProvider>(std::move(config));
  if (out) *out = provider;
  keep.push_back(std::make_unique<llm::LlmGateway>(llm::ProviderConfig::mock_defaults(), provider));
  return *keep.back();
}

inline Clock fixed_clock(Timestamp t = 1'700'000'000'000) {
  return [t] { return t; };
}

// A browser: ClientReplica plus its connection to the session.
struct Peer {
  std::string name;
  std::shared_ptr<CaptureChannel> channel;
  collab::ConnectionId conn = 0;
  std::unique_ptr<collab::ClientReplica> replica;
  std::deque<collab::WireMessage> outbox;
};

class Harness {
 public:
  explicit Harness(collab::Session& session) : session_(&session) {}

  void rebind(collab::Session& session) { session_ = &session; }

  Peer& join(const std::string& name, const std::string& client_id = {}) {
    auto p = std::make_unique<Peer>();
    p->name = name;
    p->channel = std::make_shared<CaptureChannel>();
    p->conn = session_->attach(p->channel);
    auto* raw = p.get();
    p->replica = std::make_unique<collab::ClientReplica>(
        name, [raw](const collab::WireMessage& m) { raw->outbox.push_back(m); });
    if (!client_id.empty()) {
      p->replica->connect_as(client_id);
    } else {
      p->replica->connect();
    }
    peers_.push_back(std::move(p));
    pump();
    return *peers_.back();
  }

  // Delivers frames both ways until nothing moves.
  void pump() {
    for (bool moved = true; moved;) {
      moved = false;
      for (auto& p : peers_) {
        while (!p->outbox.empty()) {
          auto m = std::move(p->outbox.front());
          p->outbox.pop_front();
          session_->handle(p->conn, m);
          moved = true;
        }
        for (auto& m : p->channel->take()) {
          p->replica->receive(m);
          moved = true;
        }
      }
    }
  }

  // Sends an action and pumps, waiting for background snapshot work.
  void act(Peer& p, collab::WireKind kind, nlohmann::json body) {
    p.replica->send_action(kind, std::move(body));
    pump();
    session_->wait_idle();
    pump();
  }

  std::vector<std::unique_ptr<Peer>>& peers() { return peers_; }

 private:
  collab::Session* session_;
  std::vector<std::unique_ptr<Peer>> peers_;
};

inline collab::Seed starter_seed() { return collab::load_seed_file(std::filesystem::path(POLICYPAD_ASSETS_DIR) / "seeds" / "starter.json"); }

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("policypad-" + tag + "-" + std::to_string(rng()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ppad::testing

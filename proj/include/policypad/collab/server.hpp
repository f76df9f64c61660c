#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "policypad/collab/seed.hpp"
#include "policypad/collab/session.hpp"
#include "policypad/llm/gateway.hpp"

namespace ppad::collab {

struct ServerOptions {
  std::string address = "0.0.0.0";
  unsigned short port = 8080;  // 0 picks a free port
  // Sessions persist under <data_dir>/sessions/<id>; existing ones are
  // restored on start.
  std::optional<std::filesystem::path> data_dir;
  // Used by POST /sessions when the request body is empty.
  std::optional<Seed> default_seed;
  std::size_t io_threads = 2;
  SessionOptions session;
};

// HTTP + WebSocket front door:
//   POST /sessions               body: seed JSON (or empty) -> {"sessionId"}
//   GET  /sessions/{id}/export   policy, heuristics, versions, gallery
//   GET  /healthz
//   GET  /sessions/{id}/ws       upgrade; WireMessage JSON text frames
class Server {
 public:
  Server(ServerOptions options, llm::LlmGateway& gateway);
  ~Server();

  // Binds, restores persisted sessions and starts serving in the background.
  // Returns the bound port.
  unsigned short start();
  void stop();

  std::string create_session(const Seed& seed);
  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ppad::collab

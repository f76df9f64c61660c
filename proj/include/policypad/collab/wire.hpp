#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ppad::collab {

enum class WireKind {
  kHello,
  kPresence,
  kDocOp,
  kScenarioEvent,
  kSpotlightEvent,
  kVersionEvent,
  kSuggestionEvent,
  kError,
  kResync,
};

std::string_view to_string(WireKind kind);
std::optional<WireKind> wire_kind_from_string(std::string_view s);

// One frame on the full-duplex channel: {"seq":n?, "kind":"...", "body":{...}}.
// Broadcast-scope frames from the server carry a session-monotonic seq;
// private frames and client submissions carry none.
struct WireMessage {
  std::optional<std::uint64_t> seq;
  WireKind kind = WireKind::kHello;
  nlohmann::json body = nlohmann::json::object();

  bool operator==(const WireMessage&) const = default;
};

nlohmann::json to_json(const WireMessage& m);
std::string serialize(const WireMessage& m);
// Throws Error(kProtocolViolation) for anything that is not a well-formed
// frame.
WireMessage parse_wire(std::string_view frame);
WireMessage wire_from_json(const nlohmann::json& j);

WireMessage make_error(std::string_view code, std::string_view message, std::string_view action = {});

// Server side of one connected client. Implementations must tolerate calls
// from any thread; the session never calls them concurrently for the same
// channel.
class ClientChannel {
 public:
  virtual ~ClientChannel() = default;
  virtual void send(const WireMessage& m) = 0;
  virtual void close(std::string_view reason) = 0;
};

}  // namespace ppad::collab

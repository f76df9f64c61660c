#include "policypad/collab/wire.hpp"

#include <array>
#include <utility>

#include "policypad/core/errors.hpp"

namespace ppad::collab {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<WireKind, std::string_view>, 9> kNames{{
    {WireKind::kHello, "hello"},
    {WireKind::kPresence, "presence"},
    {WireKind::kDocOp, "doc-op"},
    {WireKind::kScenarioEvent, "scenario-event"},
    {WireKind::kSpotlightEvent, "spotlight-event"},
    {WireKind::kVersionEvent, "version-event"},
    {WireKind::kSuggestionEvent, "suggestion-event"},
    {WireKind::kError, "error"},
    {WireKind::kResync, "resync"},
}};

}  // namespace

std::string_view to_string(WireKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<WireKind> wire_kind_from_string(std::string_view s) {
  for (const auto& [k, name] : kNames) {
    if (name == s) return k;
  }
  return std::nullopt;
}

json to_json(const WireMessage& m) {
  json j = json::object();
  if (m.seq) j["seq"] = *m.seq;
  j["kind"] = to_string(m.kind);
  j["body"] = m.body;
  return j;
}

std::string serialize(const WireMessage& m) { return to_json(m).dump(); }

WireMessage wire_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kProtocolViolation, "frame must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) fail(ErrorCode::kProtocolViolation, "frame has no kind");
  auto kind = wire_kind_from_string(j["kind"].get<std::string>());
  if (!kind) fail(ErrorCode::kProtocolViolation, "unknown frame kind '" + j["kind"].get<std::string>() + "'");
  WireMessage m;
  m.kind = *kind;
  if (j.contains("seq")) {
    if (!j["seq"].is_number_unsigned()) fail(ErrorCode::kProtocolViolation, "seq must be an unsigned integer");
    m.seq = j["seq"].get<std::uint64_t>();
  }
  if (j.contains("body")) {
    if (!j["body"].is_object()) fail(ErrorCode::kProtocolViolation, "body must be an object");
    m.body = j["body"];
  }
  return m;
}

WireMessage parse_wire(std::string_view frame) {
  auto j = json::parse(frame.begin(), frame.end(), nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::kProtocolViolation, "frame is not valid JSON");
  return wire_from_json(j);
}

WireMessage make_error(std::string_view code, std::string_view message, std::string_view action) {
  WireMessage m;
  m.kind = WireKind::kError;
  m.body = {{"code", code}, {"message", message}};
  if (!action.empty()) m.body["action"] = action;
  return m;
}

}  // namespace ppad::collab

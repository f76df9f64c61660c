#include "policypad/doc/codec.hpp"

#include "policypad/core/errors.hpp"

namespace ppad::doc {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& why) { fail(ErrorCode::kMalformedOp, why); }

OpKind op_kind_from_string(const std::string& s) {
  if (s == "insert") return OpKind::kInsert;
  if (s == "delete") return OpKind::kDelete;
  if (s == "set-payload") return OpKind::kSetPayload;
  malformed("unknown op kind '" + s + "'");
}

}  // namespace

json to_json(const PositionId& id) {
  json arr = json::array();
  for (const auto& e : id.path()) arr.push_back(json::array({e.digit, e.replica}));
  return arr;
}

PositionId position_from_json(const json& j) {
  if (!j.is_array() || j.empty()) malformed("position must be a non-empty array");
  std::vector<PathElement> path;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_string()) {
      malformed("position element must be [digit, replica]");
    }
    const auto digit = e[0].get<std::uint64_t>();
    if (digit > kDigitBase) malformed("position digit out of range");
    path.push_back({static_cast<std::uint32_t>(digit), e[1].get<std::string>()});
  }
  return PositionId(std::move(path));
}

json to_json(const DocNode& node) {
  json j{{"kind", to_string(node.kind)}};
  switch (node.kind) {
    case NodeKind::kTextRun:
      j["text"] = node.text;
      break;
    case NodeKind::kScenarioWidget:
      j["scenarioId"] = node.scenario_id;
      j["flagged"] = node.flagged;
      break;
    case NodeKind::kHeading:
      j["level"] = node.level;
      break;
    default:
      break;
  }
  if (!node.attrs.empty()) j["attrs"] = node.attrs;
  return j;
}

DocNode node_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) malformed("node without kind");
  auto kind = node_kind_from_string(j["kind"].get<std::string>());
  if (!kind) malformed("unknown node kind '" + j["kind"].get<std::string>() + "'");
  DocNode n;
  n.kind = *kind;
  try {
    n.text = j.value("text", "");
    n.scenario_id = j.value("scenarioId", "");
    n.flagged = j.value("flagged", false);
    n.level = j.value("level", 0);
    if (j.contains("attrs")) n.attrs = j["attrs"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    malformed(std::string("bad node field: ") + e.what());
  }
  return n;
}

json to_json(const DocOp& op) {
  json j{{"opId", json::array({op.id.replica, op.id.counter})},
         {"kind", to_string(op.kind)},
         {"target", to_json(op.target)}};
  if (op.node) j["node"] = to_json(*op.node);
  return j;
}

DocOp op_from_json(const json& j) {
  if (!j.is_object()) malformed("op must be an object");
  DocOp op;
  const auto& id = j.value("opId", json());
  if (!id.is_array() || id.size() != 2 || !id[0].is_string() || !id[1].is_number_unsigned()) {
    malformed("opId must be [replica, counter]");
  }
  op.id = {id[0].get<std::string>(), id[1].get<std::uint64_t>()};
  if (!j.contains("kind") || !j["kind"].is_string()) malformed("op without kind");
  op.kind = op_kind_from_string(j["kind"].get<std::string>());
  if (!j.contains("target")) malformed("op without target");
  op.target = position_from_json(j["target"]);
  if (j.contains("node") && !j["node"].is_null()) op.node = node_from_json(j["node"]);
  return op;
}

json to_json(const MaterializedNode& node) {
  json j = to_json(node.node);
  j["id"] = to_json(node.id);
  if (node.synthetic) j["synthetic"] = true;
  return j;
}

json to_json(const DocState& state) {
  json entries = json::array();
  for (const auto& [id, e] : state.entries()) {
    json je{{"id", to_json(id)}};
    if (e.node) je["node"] = to_json(*e.node);
    if (e.payload_writer) {
      je["writer"] = json::array({e.payload_writer->replica, e.payload_writer->counter});
    }
    if (e.tombstone) je["tombstone"] = true;
    entries.push_back(std::move(je));
  }
  json applied = json::array();
  for (const auto& id : state.applied()) applied.push_back(json::array({id.replica, id.counter}));
  return {{"entries", std::move(entries)}, {"applied", std::move(applied)}};
}

DocState doc_state_from_json(const json& j) {
  std::map<PositionId, Entry> entries;
  std::set<OpId> applied;
  try {
    for (const auto& je : j.at("entries")) {
      Entry e;
      if (je.contains("node")) e.node = node_from_json(je["node"]);
      if (je.contains("writer")) {
        e.payload_writer = OpId{je["writer"][0].get<std::string>(), je["writer"][1].get<std::uint64_t>()};
      }
      e.tombstone = je.value("tombstone", false);
      entries.emplace(position_from_json(je.at("id")), std::move(e));
    }
    for (const auto& id : j.at("applied")) {
      applied.insert(OpId{id[0].get<std::string>(), id[1].get<std::uint64_t>()});
    }
  } catch (const json::exception& e) {
    malformed(std::string("bad document state: ") + e.what());
  }
  DocState state;
  state.restore(std::move(entries), std::move(applied));
  return state;
}

}  // namespace ppad::doc

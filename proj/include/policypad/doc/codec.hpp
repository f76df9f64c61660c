#pragma once

#include <nlohmann/json.hpp>

#include "policypad/doc/doc_state.hpp"

namespace ppad::doc {

// Wire form: {"opId":[replica,counter],"kind":"insert|delete|set-payload",
//             "target":[[digit,replica],...],"node":{...}?}
nlohmann::json to_json(const DocOp& op);
// Throws Error(kMalformedOp) on unknown kinds or shape errors.
DocOp op_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PositionId& id);
PositionId position_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DocNode& node);
DocNode node_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MaterializedNode& node);

// Full state including tombstones and applied op ids; used for persistence
// and for full resync so clients never reissue a tombstoned id.
nlohmann::json to_json(const DocState& state);
DocState doc_state_from_json(const nlohmann::json& j);

}  // namespace ppad::doc

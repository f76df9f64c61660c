#include "policypad/core/errors.hpp"

namespace ppad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kMalformedOp: return "malformed-op";
    case ErrorCode::kUnknownHeuristic: return "unknown-heuristic-id";
    case ErrorCode::kInvalidTurnStructure: return "invalid-turn-structure";
    case ErrorCode::kEmptyText: return "empty-text";
    case ErrorCode::kNoEdit: return "no-edit";
    case ErrorCode::kAlreadyResolved: return "already-resolved";
    case ErrorCode::kAlreadySpotlighted: return "already-spotlighted";
    case ErrorCode::kPrecondition: return "precondition-violation";
    case ErrorCode::kSeedParse: return "seed-parse-error";
    case ErrorCode::kProtocolViolation: return "protocol-violation";
    case ErrorCode::kCorruptLog: return "corrupt-log";
    case ErrorCode::kConfig: return "configuration-error";
    case ErrorCode::kGateway: return "gateway-failure";
    case ErrorCode::kBusy: return "busy";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ppad

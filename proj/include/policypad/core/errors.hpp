#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppad {

enum class ErrorCode {
  kNotFound,
  kInvalidArgument,
  kMalformedOp,
  kUnknownHeuristic,
  kInvalidTurnStructure,
  kEmptyText,
  kNoEdit,
  kAlreadyResolved,
  kAlreadySpotlighted,
  kPrecondition,
  kSeedParse,
  kProtocolViolation,
  kCorruptLog,
  kConfig,
  kGateway,
  kBusy,
};

std::string_view to_string(ErrorCode code);

// Base error for everything the library raises on purpose. Callers that need
// to branch on the failure switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace ppad

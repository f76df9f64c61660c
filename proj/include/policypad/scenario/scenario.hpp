#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/core/types.hpp"

namespace ppad::scenario {

// Version slot for responses produced against the live, unsaved policy.
inline constexpr std::string_view kWorkingVersion = "working";

inline constexpr std::size_t kDefaultMaxTurns = 40;

enum class Provenance { kGenerated, kHumanEdited };

struct ResponseRecord {
  std::string version;
  std::string text;
  Provenance provenance = Provenance::kGenerated;
  std::optional<std::string> superseded;  // pre-edit text, human edits only
  bool showing_superseded = false;

  const std::string& displayed() const {
    return showing_superseded && superseded ? *superseded : text;
  }
  bool operator==(const ResponseRecord&) const = default;
};

struct Flag {
  std::string actor;
  Timestamp time = 0;
  std::optional<std::string> note;

  bool operator==(const Flag&) const = default;
};

struct Scenario {
  std::string id;
  std::string title;
  std::string summary;
  std::vector<Turn> background;
  Turn newest_user;
  std::map<std::string, ResponseRecord> responses;  // by version id
  // Per-version regeneration failures recorded at snapshot time.
  std::map<std::string, std::string> failures;
  std::optional<Flag> flag;
  std::optional<std::string> parent;
  bool shared = true;
  std::string owner;  // creating client; private scenarios are visible to it only
  bool deleted = false;

  std::size_t turn_count() const { return background.size() + 1; }
  // Working response if present, else the response of the highest version.
  const ResponseRecord* newest_response() const;

  bool operator==(const Scenario&) const = default;
};

// Background alternates user/assistant starting with user and ends with an
// assistant turn (or is empty); newest message is a user turn; no blank
// turns; 1 <= turns <= max_turns. Throws Error(kInvalidTurnStructure).
void validate_turns(const std::vector<Turn>& background, const Turn& newest_user,
                    std::size_t max_turns = kDefaultMaxTurns);

nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Turn& t);
Turn turn_from_json(const nlohmann::json& j);

std::string_view to_string(Provenance p);

}  // namespace ppad::scenario

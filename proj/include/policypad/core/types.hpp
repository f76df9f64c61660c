#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace ppad {

// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

// Injectable time source; sessions and stores never read the wall clock
// directly so tests can script time.
using Clock = std::function<Timestamp()>;

inline Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

enum class Role { kUser, kAssistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct Turn {
  Role role = Role::kUser;
  std::string text;
  Timestamp created = 0;

  bool operator==(const Turn&) const = default;
};

}  // namespace ppad

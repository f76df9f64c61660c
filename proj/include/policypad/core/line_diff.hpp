#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ppad::diff {

enum class LineOp { kKeep, kRemove, kAdd };

struct DiffLine {
  LineOp op;
  std::string text;
};

// Minimal line edit script via longest common subsequence.
std::vector<DiffLine> diff_lines(const std::vector<std::string>& before,
                                 const std::vector<std::string>& after);

// Unified diff with `context` lines around each hunk. Empty string when the
// inputs are equal.
std::string unified_diff(std::string_view before, std::string_view after,
                         std::string_view before_label,
                         std::string_view after_label, int context = 3);

// Text of the added/removed lines of a unified diff, markers stripped,
// headers and hunk lines skipped.
std::vector<std::string> changed_lines(std::string_view unified);

}  // namespace ppad::diff

#include "policypad/core/line_diff.hpp"

#include <algorithm>

#include "policypad/core/text.hpp"

namespace ppad::diff {

std::vector<DiffLine> diff_lines(const std::vector<std::string>& before,
                                 const std::vector<std::string>& after) {
  const std::size_t n = before.size();
  const std::size_t m = after.size();
  // lcs[i][j] = LCS length of before[i..] and after[j..]
  std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = before[i] == after[j]
                      ? lcs[i + 1][j + 1] + 1
                      : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  std::vector<DiffLine> out;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (before[i] == after[j]) {
      out.push_back({LineOp::kKeep, before[i]});
      ++i;
      ++j;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      out.push_back({LineOp::kRemove, before[i++]});
    } else {
      out.push_back({LineOp::kAdd, after[j++]});
    }
  }
  while (i < n) out.push_back({LineOp::kRemove, before[i++]});
  while (j < m) out.push_back({LineOp::kAdd, after[j++]});
  return out;
}

namespace {

std::vector<std::string> lines_of(std::string_view s) {
  if (s.empty()) return {};
  auto lines = text::split_lines(s);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

std::string unified_diff(std::string_view before, std::string_view after,
                         std::string_view before_label,
                         std::string_view after_label, int context) {
  const auto script = diff_lines(lines_of(before), lines_of(after));
  const auto changed = [&](std::size_t k) { return script[k].op != LineOp::kKeep; };
  if (std::none_of(script.begin(), script.end(),
                   [](const DiffLine& l) { return l.op != LineOp::kKeep; })) {
    return {};
  }

  std::string out;
  out += "--- ";
  out += before_label;
  out += "\n+++ ";
  out += after_label;
  out += "\n";

  const std::size_t total = script.size();
  std::size_t k = 0;
  // Running 1-based line numbers in each file at script index k.
  std::size_t line_a = 1, line_b = 1;
  while (k < total) {
    if (!changed(k)) {
      ++line_a;
      ++line_b;
      ++k;
      continue;
    }
    // Hunk start: back up to include leading context.
    std::size_t start = k;
    std::size_t back = 0;
    while (start > 0 && back < static_cast<std::size_t>(context) && !changed(start - 1)) {
      --start;
      ++back;
    }
    std::size_t a0 = line_a - back, b0 = line_b - back;
    // Extend the hunk while changes are within 2*context of each other.
    std::size_t end = k;
    std::size_t quiet = 0;
    while (end < total) {
      if (changed(end)) {
        quiet = 0;
      } else if (++quiet > static_cast<std::size_t>(2 * context)) {
        break;
      }
      ++end;
    }
    // Trim trailing context to `context` lines.
    std::size_t trailing = 0;
    while (end > k && !changed(end - 1)) {
      --end;
      ++trailing;
    }
    end += std::min<std::size_t>(trailing, context);

    std::size_t count_a = 0, count_b = 0;
    std::string body;
    for (std::size_t t = start; t < end; ++t) {
      switch (script[t].op) {
        case LineOp::kKeep:
          body += " " + script[t].text + "\n";
          ++count_a;
          ++count_b;
          break;
        case LineOp::kRemove:
          body += "-" + script[t].text + "\n";
          ++count_a;
          break;
        case LineOp::kAdd:
          body += "+" + script[t].text + "\n";
          ++count_b;
          break;
      }
    }
    out += "@@ -" + std::to_string(count_a ? a0 : a0 - 1) + "," + std::to_string(count_a) +
           " +" + std::to_string(count_b ? b0 : b0 - 1) + "," + std::to_string(count_b) +
           " @@\n";
    out += body;
    for (std::size_t t = k; t < end; ++t) {
      if (script[t].op != LineOp::kAdd) ++line_a;
      if (script[t].op != LineOp::kRemove) ++line_b;
    }
    k = end;
  }
  return out;
}

std::vector<std::string> changed_lines(std::string_view unified) {
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(unified)) {
    if (line.rfind("+++", 0) == 0 || line.rfind("---", 0) == 0) continue;
    if (!line.empty() && (line[0] == '+' || line[0] == '-')) {
      out.push_back(line.substr(1));
    }
  }
  return out;
}

}  // namespace ppad::diff

#include "policypad/collab/seed.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"
#include "policypad/policy/blocks.hpp"

namespace ppad::collab {

using nlohmann::json;

namespace {

[[noreturn]] void seed_error(const std::string& where, const std::string& what) {
  fail(ErrorCode::kSeedParse, where + ": " + what);
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) seed_error(where, std::string("missing field '") + key + "'");
  if (!obj[key].is_string()) seed_error(where + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

void append_text(std::vector<doc::DocNode>& out, std::string_view s) {
  for (const auto& cp : text::split_code_points(s)) out.push_back(doc::DocNode::text_run(cp));
}

// One line of policy text with optional "@[Title]" widgets.
void append_inline(std::vector<doc::DocNode>& out, std::string_view line, std::size_t line_no,
                   const std::map<std::string, std::string>& title_ids) {
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto at = line.find("@[", pos);
    if (at == std::string_view::npos) {
      append_text(out, line.substr(pos));
      break;
    }
    auto close = line.find(']', at + 2);
    if (close == std::string_view::npos) seed_error("policy line " + std::to_string(line_no), "unterminated '@['");
    append_text(out, line.substr(pos, at - pos));
    std::string title(line.substr(at + 2, close - at - 2));
    auto it = title_ids.find(title);
    if (it == title_ids.end()) {
      seed_error("policy line " + std::to_string(line_no), "no scenario titled '" + title + "'");
    }
    out.push_back(doc::DocNode::widget(it->second));
    pos = close + 1;
  }
  out.push_back(doc::DocNode::text_run("\n"));
}

}  // namespace

Seed parse_seed(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    seed_error("line " + std::to_string(line_of(json_text, e.byte == 0 ? 0 : e.byte - 1)), "invalid JSON");
  }
  if (!j.is_object()) seed_error("line 1", "seed must be a JSON object");

  Seed seed;
  if (j.contains("scenarios")) {
    if (!j["scenarios"].is_array()) seed_error("scenarios", "expected an array");
    for (std::size_t i = 0; i < j["scenarios"].size(); ++i) {
      const auto& sj = j["scenarios"][i];
      const std::string where = "scenarios[" + std::to_string(i) + "]";
      SeedScenario sc;
      sc.title = require_string(sj, "title", where);
      if (text::is_blank(sc.title)) seed_error(where + ".title", "must not be blank");
      if (!sj.contains("turns") || !sj["turns"].is_array() || sj["turns"].empty()) {
        seed_error(where + ".turns", "expected a non-empty array");
      }
      for (std::size_t k = 0; k < sj["turns"].size(); ++k) {
        const std::string tw = where + ".turns[" + std::to_string(k) + "]";
        const auto& tj = sj["turns"][k];
        const auto role_name = require_string(tj, "role", tw);
        if (role_name != "user" && role_name != "assistant") {
          seed_error(tw + ".role", "expected \"user\" or \"assistant\"");
        }
        auto body = require_string(tj, "text", tw);
        if (text::is_blank(body)) seed_error(tw + ".text", "must not be blank");
        sc.turns.push_back({role_from_string(role_name), std::move(body), 0});
      }
      if (sc.turns.back().role != Role::kUser) {
        seed_error(where + ".turns[" + std::to_string(sc.turns.size() - 1) + "].role",
                   "the final turn must be a user turn");
      }
      seed.scenarios.push_back(std::move(sc));
    }
  }
  if (j.contains("heuristics")) {
    if (!j["heuristics"].is_array()) seed_error("heuristics", "expected an array of strings");
    for (std::size_t i = 0; i < j["heuristics"].size(); ++i) {
      const auto& h = j["heuristics"][i];
      const std::string where = "heuristics[" + std::to_string(i) + "]";
      if (!h.is_string() || text::is_blank(h.get<std::string>())) seed_error(where, "expected a non-blank string");
      seed.heuristics.emplace_back(text::trim(h.get<std::string>()));
    }
  }
  if (j.contains("policy")) {
    if (!j["policy"].is_string()) seed_error("policy", "expected a string");
    seed.policy = j["policy"].get<std::string>();
  }
  return seed;
}

Seed load_seed_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kSeedParse, "cannot open seed file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_seed(ss.str());
}

std::vector<doc::DocNode> seed_document_nodes(const std::vector<std::string>& heuristics, std::string_view policy,
                                              const std::map<std::string, std::string>& title_ids) {
  std::vector<doc::DocNode> out;
  out.push_back(doc::DocNode::heading(1));
  append_text(out, policy::kHeuristicsHeading);
  out.push_back(doc::DocNode::text_run("\n"));
  for (const auto& h : heuristics) {
    out.push_back(doc::DocNode::list_item());
    append_text(out, h);
    out.push_back(doc::DocNode::text_run("\n"));
  }

  const auto lines = text::split_lines(policy);
  bool opened = false;
  for (const auto& line : lines) {
    if (text::is_blank(line)) continue;
    opened = line.rfind("# ", 0) == 0 && text::trim(line.substr(2)) != policy::kHeuristicsHeading;
    break;
  }
  if (!opened) {
    out.push_back(doc::DocNode::heading(1));
    append_text(out, "Policy");
    out.push_back(doc::DocNode::text_run("\n"));
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::size_t line_no = i + 1;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed == ":::draft") {
      out.push_back(doc::DocNode::drafting_open());
    } else if (trimmed == ":::") {
      out.push_back(doc::DocNode::drafting_close());
    } else if (line.rfind("### ", 0) == 0 || line.rfind("## ", 0) == 0 || line.rfind("# ", 0) == 0) {
      const int level = static_cast<int>(line.find(' '));
      out.push_back(doc::DocNode::heading(level));
      append_inline(out, text::trim(line.substr(level + 1)), line_no, title_ids);
    } else if (line.rfind("- ", 0) == 0) {
      out.push_back(doc::DocNode::list_item());
      append_inline(out, text::trim(line.substr(2)), line_no, title_ids);
    } else {
      append_inline(out, trimmed, line_no, title_ids);
    }
  }
  return out;
}

}  // namespace ppad::collab

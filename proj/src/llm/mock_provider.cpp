#include "policypad/llm/mock_provider.hpp"

#include <algorithm>
#include <cctype>

#include "policypad/core/line_diff.hpp"
#include "policypad/core/text.hpp"

namespace ppad::llm {

using nlohmann::json;

namespace {

std::string first_words(std::string_view s, std::size_t n) {
  auto words = text::split_words(s);
  if (words.size() > n) words.resize(n);
  return text::join(words, " ");
}

std::string hint_or(const LlmRequest& req, const char* key, std::string fallback = {}) {
  auto it = req.hints.find(key);
  return it == req.hints.end() ? fallback : it->second;
}

std::vector<std::string> sentences(std::string_view doc) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    char c = doc[i];
    if (c == '\n') {
      if (!text::is_blank(cur)) out.emplace_back(text::trim(cur));
      cur.clear();
      continue;
    }
    cur.push_back(c);
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == doc.size() || doc[i + 1] == ' ' || doc[i + 1] == '\n')) {
      if (!text::is_blank(cur)) out.emplace_back(text::trim(cur));
      cur.clear();
    }
  }
  if (!text::is_blank(cur)) out.emplace_back(text::trim(cur));
  return out;
}

std::set<std::string> content_words(std::string_view s) {
  std::set<std::string> out;
  for (auto& w : text::split_words(text::normalize(s))) {
    std::erase_if(w, [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); });
    if (w.size() >= 5) out.insert(w);
  }
  return out;
}

}  // namespace

MockConfig MockConfig::from_json(const json& j) {
  MockConfig c;
  if (j.contains("failingHeuristics")) {
    for (const auto& v : j["failingHeuristics"]) c.failing_heuristics.insert(v.get<std::size_t>());
  }
  if (j.contains("noveltyVotes")) {
    for (const auto& [stmt, votes] : j["noveltyVotes"].items()) {
      c.novelty_votes[stmt] = {votes.at(0).get<bool>(), votes.at(1).get<bool>(), votes.at(2).get<bool>()};
    }
  }
  if (j.contains("quotes")) {
    for (const auto& [stmt, qs] : j["quotes"].items()) {
      auto& list = c.quotes[stmt];
      for (const auto& q : qs) list.push_back({q.at("source").get<std::string>(), q.at("text").get<std::string>()});
    }
  }
  c.malformed_json_replies = j.value("malformedJsonReplies", 0);
  return c;
}

MockProvider::MockProvider(MockConfig config) : config_(std::move(config)) {}

void MockProvider::add_fault(MockFault fault) {
  std::lock_guard lock(mu_);
  config_.faults.push_back(std::move(fault));
}

void MockProvider::set_config(MockConfig config) {
  std::lock_guard lock(mu_);
  config_ = std::move(config);
}

std::vector<LlmRequest> MockProvider::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::string MockProvider::policy_tag(std::string_view system) { return text::short_hash(system); }

std::string MockProvider::chat_reply(const LlmRequest& req) {
  const auto& last = req.messages.back().text;
  return "[policy:" + policy_tag(req.system) + "] Thanks for reaching out. About \"" +
         first_words(last, 12) + "\": here is a considered answer (turn " +
         std::to_string(req.messages.size()) + ").";
}

std::string MockProvider::title_for(int version, std::string_view diff) {
  std::vector<std::string> words;
  for (const auto& line : diff::changed_lines(diff)) {
    for (auto& w : text::split_words(line)) {
      if (words.size() < 6) words.push_back(std::move(w));
    }
  }
  return "v" + std::to_string(version) + ": " + text::join(words, " ");
}

std::string MockProvider::summary_for(std::string_view title, std::size_t turns) {
  return std::string(title) + ": a " + std::to_string(turns) + "-turn conversation.";
}

std::string MockProvider::statement_for(std::string_view original, std::string_view edited) {
  const auto script = diff::diff_lines(text::split_words(original), text::split_words(edited));
  std::vector<std::string> added, removed;
  for (const auto& l : script) {
    if (l.op == diff::LineOp::kAdd && added.size() < 12) added.push_back(l.text);
    if (l.op == diff::LineOp::kRemove && removed.size() < 12) removed.push_back(l.text);
  }
  if (!added.empty()) {
    return "When responding in similar situations, include content like: \"" + text::join(added, " ") + "\".";
  }
  if (!removed.empty()) {
    return "When responding in similar situations, avoid content like: \"" + text::join(removed, " ") + "\".";
  }
  return "When responding in similar situations, match the formatting of the edited response.";
}

std::string MockProvider::structured_reply(const LlmRequest& req) {
  switch (req.task) {
    case LlmTask::kHeuristicEval: {
      auto hs = json::parse(hint_or(req, hint::kHeuristics, "[]"));
      json results = json::array();
      std::size_t pos = 1;
      for (const auto& h : hs) {
        const bool failing = config_.failing_heuristics.count(pos) != 0;
        results.push_back({{"id", h.at("id")},
                           {"status", failing ? "unsatisfied" : "satisfied"},
                           {"justification", std::string(failing ? "Not met: " : "Met: ") +
                                                 "the policy was reviewed against \"" +
                                                 h.at("text").get<std::string>() + "\"."}});
        ++pos;
      }
      return json{{"results", results}}.dump();
    }
    case LlmTask::kSuggestion:
      return json{{"statement", statement_for(hint_or(req, hint::kOriginal), hint_or(req, hint::kEdited))}}
          .dump();
    case LlmTask::kNoveltyScreen: {
      const auto statement = hint_or(req, hint::kStatement);
      const auto idx = static_cast<std::size_t>(std::stoi(hint_or(req, hint::kPromptIndex, "0")));
      const auto needle = text::normalize(statement);
      for (const auto& doc : json::parse(hint_or(req, hint::kCorpus, "[]"))) {
        if (text::normalize(doc.at("text").get<std::string>()).find(needle) != std::string::npos) {
          return json{{"novel", false},
                      {"justification", "The statement already appears in " +
                                            doc.at("source").get<std::string>() + "."}}
              .dump();
        }
      }
      bool novel = true;
      if (auto it = config_.novelty_votes.find(statement); it != config_.novelty_votes.end()) {
        novel = it->second.at(std::min<std::size_t>(idx, 2));
      }
      return json{{"novel", novel},
                  {"justification", novel ? "No existing policy covers this idea at this level of detail."
                                          : "An existing policy already covers this idea."}}
          .dump();
    }
    case LlmTask::kQuoteRetrieval: {
      const auto statement = hint_or(req, hint::kStatement);
      json quotes = json::array();
      if (auto it = config_.quotes.find(statement); it != config_.quotes.end()) {
        for (const auto& q : it->second) quotes.push_back({{"source", q.source}, {"text", q.text}});
      } else {
        const auto wanted = content_words(statement);
        for (const auto& doc : json::parse(hint_or(req, hint::kCorpus, "[]"))) {
          for (const auto& s : sentences(doc.at("text").get<std::string>())) {
            const auto have = content_words(s);
            const auto shared = std::count_if(wanted.begin(), wanted.end(),
                                              [&](const std::string& w) { return have.count(w) != 0; });
            if (shared >= 2 && quotes.size() < 3) {
              quotes.push_back({{"source", doc.at("source")}, {"text", s}});
            }
          }
        }
      }
      return json{{"quotes", quotes}}.dump();
    }
    default:
      return "{}";
  }
}

LlmResponse MockProvider::complete(const LlmRequest& req, const RoleEndpoint&) {
  std::lock_guard lock(mu_);
  requests_.push_back(req);
  const std::string& last = req.messages.empty() ? std::string() : req.messages.back().text;
  for (auto& f : config_.faults) {
    if (f.remaining == 0) continue;
    if (f.role && *f.role != req.role) continue;
    if (f.task && *f.task != req.task) continue;
    if (!f.contains.empty() && last.find(f.contains) == std::string::npos &&
        req.system.find(f.contains) == std::string::npos) {
      continue;
    }
    if (f.remaining > 0) --f.remaining;
    throw LlmError(f.kind, "injected mock fault");
  }

  LlmResponse resp;
  switch (req.task) {
    case LlmTask::kChat:
      resp.text = chat_reply(req);
      break;
    case LlmTask::kTitle:
      resp.text = title_for(std::stoi(hint_or(req, hint::kVersion, "0")), hint_or(req, hint::kDiff));
      break;
    case LlmTask::kSummary:
      resp.text = summary_for(hint_or(req, hint::kTitle),
                              static_cast<std::size_t>(std::stoul(hint_or(req, hint::kTurnCount, "0"))));
      break;
    default:
      if (config_.malformed_json_replies > 0) {
        --config_.malformed_json_replies;
        resp.text = "Sure, here is what I found.";
      } else {
        resp.text = structured_reply(req);
      }
      break;
  }
  resp.usage.prompt_tokens = static_cast<int>(text::split_words(req.system).size() +
                                              text::split_words(last).size());
  resp.usage.completion_tokens = static_cast<int>(text::split_words(resp.text).size());
  return resp;
}

}  // namespace ppad::llm

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/llm/gateway.hpp"

namespace ppad::novelty {

struct Document {
  std::string source_id;
  std::string text;
};

// The existing policies new statements are compared against.
struct Corpus {
  std::vector<Document> documents;

  // One document per regular file, source id = file name; sorted by name so
  // the order does not depend on the filesystem.
  static Corpus load_dir(const std::filesystem::path& dir);
  const Document* find(std::string_view source_id) const;
  // Throws kPrecondition when empty, kInvalidArgument on duplicate ids.
  void validate() const;
};

struct ScreenPrompt {
  std::string id;
  std::string text;
};

// The three screening prompts plus the quote-retrieval prompt, loaded from
// a manifest. The manifest hash covers ids and prompt bytes.
struct PromptSet {
  std::string version;
  std::string origin;
  std::vector<ScreenPrompt> screens;
  std::string quote_prompt;
  std::string manifest_hash;

  static PromptSet load(const std::filesystem::path& dir = default_dir());
  static std::filesystem::path default_dir();
};

enum class Vote { kNovel, kNotNovel };
enum class Decision { kNovel, kNotNovel, kAbstain };
enum class Final { kNovel, kNotNovel };
enum class Reason { kScreenedOut, kAnnotatorConsensus, kAnnotatorDefault };

std::string_view to_string(Vote v);
std::string_view to_string(Decision d);
std::string_view to_string(Final f);
std::string_view to_string(Reason r);
Decision decision_from_string(std::string_view s);

struct PromptVote {
  std::string prompt_id;
  Vote vote = Vote::kNotNovel;
  std::string justification;

  bool operator==(const PromptVote&) const = default;
};

struct Quote {
  std::string source_id;
  std::string text;

  bool operator==(const Quote&) const = default;
};

struct Annotation {
  std::string annotator;
  Decision decision = Decision::kAbstain;
  std::string note;

  bool operator==(const Annotation&) const = default;
};

struct NoveltyVerdict {
  std::string id;
  std::string group;
  std::string statement;
  nlohmann::json tags = nlohmann::json::object();  // other input fields, for grouping
  std::vector<PromptVote> votes;
  std::vector<Quote> quotes;
  std::size_t dropped_quotes = 0;
  // First-round annotations when a discussion round happened.
  std::vector<Annotation> first_round;
  std::vector<Annotation> annotations;  // the deciding round
  std::optional<Final> final;           // absent while pending
  std::optional<Reason> reason;
  std::string prompt_manifest;

  bool candidate() const;  // passed the unanimity gate
  bool operator==(const NoveltyVerdict&) const = default;
};

nlohmann::json to_json(const NoveltyVerdict& v);
NoveltyVerdict verdict_from_json(const nlohmann::json& j);
nlohmann::json verdicts_to_json(const std::vector<NoveltyVerdict>& vs);
std::vector<NoveltyVerdict> verdicts_from_json(const nlohmann::json& j);

bool unanimous_novel(const std::vector<PromptVote>& votes);

llm::LlmRequest make_screen_request(const std::string& statement, const Corpus& corpus, const PromptSet& prompts,
                                    std::size_t index);
llm::LlmRequest make_quote_request(const std::string& statement, const Corpus& corpus, const PromptSet& prompts);

// Three reasoning-role calls, one per screening prompt. A call that fails
// after the gateway's retries counts as a not-novel vote.
std::vector<PromptVote> screen(const std::string& statement, const Corpus& corpus, const PromptSet& prompts,
                               llm::LlmGateway& gateway);

// Quotes the model offers, keeping only those that occur verbatim in the
// cited source document. Rejected quotes are reported through `dropped`.
std::vector<Quote> retrieve_quotes(const std::string& statement, const Corpus& corpus, const PromptSet& prompts,
                                   llm::LlmGateway& gateway, std::vector<Quote>* dropped = nullptr);

struct StatementInput {
  std::string group;
  std::string text;
  nlohmann::json tags = nlohmann::json::object();
};

// JSON lines {"group":..., "text":..., other fields kept as tags}.
std::vector<StatementInput> read_statements(std::istream& in);

// Screens every statement and retrieves quotes for candidates. Statements
// run in parallel, bounded by the gateway's in-flight cap; output order and
// content are independent of scheduling.
std::vector<NoveltyVerdict> screen_all(const std::vector<StatementInput>& inputs, const Corpus& corpus,
                                       const PromptSet& prompts, llm::LlmGateway& gateway);

}  // namespace ppad::novelty

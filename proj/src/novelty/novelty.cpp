#include "policypad/novelty/novelty.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <thread>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"

namespace ppad::novelty {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json corpus_hint(const Corpus& corpus) {
  json docs = json::array();
  for (const auto& d : corpus.documents) docs.push_back({{"source", d.source_id}, {"text", d.text}});
  return docs;
}

std::string corpus_block(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents) out += "<document id=\"" + d.source_id + "\">\n" + d.text + "\n</document>\n";
  return out;
}

template <class E, std::size_t N>
E enum_from(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table, const char* what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  fail(ErrorCode::kInvalidArgument, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<Decision, std::string_view>, 3> kDecisions{
    {{Decision::kNovel, "novel"}, {Decision::kNotNovel, "not-novel"}, {Decision::kAbstain, "abstain"}}};
constexpr std::array<std::pair<Reason, std::string_view>, 3> kReasons{{{Reason::kScreenedOut, "screened-out"},
                                                                        {Reason::kAnnotatorConsensus, "annotator-consensus"},
                                                                        {Reason::kAnnotatorDefault, "annotator-default"}}};

json annotation_json(const Annotation& a) {
  json j = {{"annotator", a.annotator}, {"decision", to_string(a.decision)}};
  if (!a.note.empty()) j["note"] = a.note;
  return j;
}

Annotation annotation_from(const json& j) {
  return {j.at("annotator").get<std::string>(), decision_from_string(j.at("decision").get<std::string>()),
          j.value("note", "")};
}

}  // namespace

std::string_view to_string(Vote v) { return v == Vote::kNovel ? "novel" : "not-novel"; }
std::string_view to_string(Final f) { return f == Final::kNovel ? "novel" : "not-novel"; }

std::string_view to_string(Decision d) {
  for (const auto& [e, name] : kDecisions) {
    if (e == d) return name;
  }
  return "?";
}

std::string_view to_string(Reason r) {
  for (const auto& [e, name] : kReasons) {
    if (e == r) return name;
  }
  return "?";
}

Decision decision_from_string(std::string_view s) { return enum_from(s, kDecisions, "decision"); }

// --- corpus and prompts ---------------------------------------------------------

Corpus Corpus::load_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kNotFound, "corpus directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Corpus c;
  for (const auto& f : files) c.documents.push_back({f.filename().string(), read_file(f)});
  return c;
}

const Document* Corpus::find(std::string_view source_id) const {
  for (const auto& d : documents) {
    if (d.source_id == source_id) return &d;
  }
  return nullptr;
}

void Corpus::validate() const {
  if (documents.empty()) fail(ErrorCode::kPrecondition, "reference corpus is empty");
  std::set<std::string> seen;
  for (const auto& d : documents) {
    if (!seen.insert(d.source_id).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate corpus source id '" + d.source_id + "'");
    }
  }
}

fs::path PromptSet::default_dir() { return fs::path(POLICYPAD_ASSETS_DIR) / "novelty"; }

PromptSet PromptSet::load(const fs::path& dir) {
  auto manifest = json::parse(read_file(dir / "manifest.json"), nullptr, false);
  if (manifest.is_discarded()) fail(ErrorCode::kConfig, "novelty prompt manifest is not valid JSON");
  PromptSet p;
  try {
    p.version = manifest.at("version").get<std::string>();
    p.origin = manifest.value("origin", "");
    std::string hashed = p.version + "\n";
    for (const auto& s : manifest.at("screens")) {
      ScreenPrompt sp{s.at("id").get<std::string>(), read_file(dir / s.at("file").get<std::string>())};
      hashed += sp.id + "\n" + sp.text + "\n";
      p.screens.push_back(std::move(sp));
    }
    p.quote_prompt = read_file(dir / manifest.at("quoteRetrieval").get<std::string>());
    hashed += "quotes\n" + p.quote_prompt;
    p.manifest_hash = text::short_hash(hashed);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("novelty prompt manifest: ") + e.what());
  }
  if (p.screens.size() != 3) fail(ErrorCode::kConfig, "novelty prompt manifest must list exactly three screens");
  return p;
}

// --- verdict JSON ----------------------------------------------------------------

bool unanimous_novel(const std::vector<PromptVote>& votes) {
  return votes.size() == 3 && std::all_of(votes.begin(), votes.end(), [](const auto& v) { return v.vote == Vote::kNovel; });
}

bool NoveltyVerdict::candidate() const { return unanimous_novel(votes); }

json to_json(const NoveltyVerdict& v) {
  json votes = json::array();
  for (const auto& pv : v.votes) {
    votes.push_back({{"prompt", pv.prompt_id}, {"vote", to_string(pv.vote)}, {"justification", pv.justification}});
  }
  json quotes = json::array();
  for (const auto& q : v.quotes) quotes.push_back({{"source", q.source_id}, {"text", q.text}});
  json ann = json::array();
  for (const auto& a : v.annotations) ann.push_back(annotation_json(a));
  json j = {{"id", v.id},
            {"group", v.group},
            {"statement", v.statement},
            {"tags", v.tags},
            {"votes", votes},
            {"quotes", quotes},
            {"droppedQuotes", v.dropped_quotes},
            {"annotations", ann},
            {"final", v.final ? json(to_string(*v.final)) : json(nullptr)},
            {"reason", v.reason ? json(to_string(*v.reason)) : json(nullptr)},
            {"promptManifest", v.prompt_manifest}};
  if (!v.first_round.empty()) {
    json first = json::array();
    for (const auto& a : v.first_round) first.push_back(annotation_json(a));
    j["discussion"] = {{"firstRound", first}};
  }
  return j;
}

NoveltyVerdict verdict_from_json(const json& j) {
  NoveltyVerdict v;
  v.id = j.at("id").get<std::string>();
  v.group = j.value("group", "");
  v.statement = j.at("statement").get<std::string>();
  v.tags = j.value("tags", json::object());
  for (const auto& pv : j.at("votes")) {
    v.votes.push_back({pv.at("prompt").get<std::string>(),
                       pv.at("vote").get<std::string>() == "novel" ? Vote::kNovel : Vote::kNotNovel,
                       pv.value("justification", "")});
  }
  for (const auto& q : j.value("quotes", json::array())) {
    v.quotes.push_back({q.at("source").get<std::string>(), q.at("text").get<std::string>()});
  }
  v.dropped_quotes = j.value("droppedQuotes", std::size_t{0});
  for (const auto& a : j.value("annotations", json::array())) v.annotations.push_back(annotation_from(a));
  if (j.contains("discussion")) {
    for (const auto& a : j["discussion"].value("firstRound", json::array())) v.first_round.push_back(annotation_from(a));
  }
  if (j.contains("final") && j["final"].is_string()) {
    v.final = j["final"].get<std::string>() == "novel" ? Final::kNovel : Final::kNotNovel;
  }
  if (j.contains("reason") && j["reason"].is_string()) v.reason = enum_from(j["reason"].get<std::string>(), kReasons, "reason");
  v.prompt_manifest = j.value("promptManifest", "");
  return v;
}

json verdicts_to_json(const std::vector<NoveltyVerdict>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back(to_json(v));
  return out;
}

std::vector<NoveltyVerdict> verdicts_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::kInvalidArgument, "verdicts file must hold a JSON array");
  std::vector<NoveltyVerdict> out;
  for (const auto& v : j) out.push_back(verdict_from_json(v));
  return out;
}

// --- screening ---------------------------------------------------------------------

llm::LlmRequest make_screen_request(const std::string& statement, const Corpus& corpus, const PromptSet& prompts,
                                    std::size_t index) {
  llm::LlmRequest req;
  req.role = llm::LlmRole::kReasoning;
  req.task = llm::LlmTask::kNoveltyScreen;
  req.system = prompts.screens.at(index).text;
  req.messages.push_back(
      {Role::kUser, "Existing policies:\n" + corpus_block(corpus) + "\nCandidate statement:\n" + statement, 0});
  req.params = llm::default_params(req.role);
  req.hints[llm::hint::kStatement] = statement;
  req.hints[llm::hint::kPromptIndex] = std::to_string(index);
  req.hints[llm::hint::kCorpus] = corpus_hint(corpus).dump();
  return req;
}

llm::LlmRequest make_quote_request(const std::string& statement, const Corpus& corpus, const PromptSet& prompts) {
  llm::LlmRequest req;
  req.role = llm::LlmRole::kReasoning;
  req.task = llm::LlmTask::kQuoteRetrieval;
  req.system = prompts.quote_prompt;
  req.messages.push_back(
      {Role::kUser, "Existing policies:\n" + corpus_block(corpus) + "\nCandidate statement:\n" + statement, 0});
  req.params = llm::default_params(req.role);
  req.hints[llm::hint::kStatement] = statement;
  req.hints[llm::hint::kCorpus] = corpus_hint(corpus).dump();
  return req;
}

std::vector<PromptVote> screen(const std::string& statement, const Corpus& corpus, const PromptSet& prompts,
                               llm::LlmGateway& gateway) {
  corpus.validate();
  std::vector<PromptVote> votes;
  for (std::size_t i = 0; i < prompts.screens.size(); ++i) {
    PromptVote v{prompts.screens[i].id, Vote::kNotNovel, ""};
    try {
      auto reply = gateway.dispatch_json(make_screen_request(statement, corpus, prompts, i));
      if (!reply.contains("novel") || !reply["novel"].is_boolean()) {
        throw llm::LlmError(llm::FailureKind::kStructuredOutput, "reply has no boolean 'novel'");
      }
      v.vote = reply["novel"].get<bool>() ? Vote::kNovel : Vote::kNotNovel;
      v.justification = reply.value("justification", "");
      if (text::is_blank(v.justification)) v.justification = "(no justification given)";
    } catch (const Error& e) {
      v.vote = Vote::kNotNovel;
      v.justification = std::string("screening call failed, counted as not novel: ") + e.what();
    }
    votes.push_back(std::move(v));
  }
  return votes;
}

std::vector<Quote> retrieve_quotes(const std::string& statement, const Corpus& corpus, const PromptSet& prompts,
                                   llm::LlmGateway& gateway, std::vector<Quote>* dropped) {
  corpus.validate();
  json reply;
  try {
    reply = gateway.dispatch_json(make_quote_request(statement, corpus, prompts));
  } catch (const Error&) {
    return {};
  }
  std::vector<Quote> kept;
  for (const auto& q : reply.value("quotes", json::array())) {
    if (!q.is_object() || !q.contains("text") || !q["text"].is_string()) continue;
    Quote quote{q.value("source", ""), q["text"].get<std::string>()};
    if (text::is_blank(quote.text)) continue;
    const Document* home = corpus.find(quote.source_id);
    if (!home || home->text.find(quote.text) == std::string::npos) {
      // Verbatim elsewhere: keep it under the document that contains it.
      home = nullptr;
      for (const auto& d : corpus.documents) {
        if (d.text.find(quote.text) != std::string::npos) {
          home = &d;
          break;
        }
      }
    }
    if (!home) {
      if (dropped) dropped->push_back(quote);
      continue;
    }
    quote.source_id = home->source_id;
    if (std::find(kept.begin(), kept.end(), quote) == kept.end()) kept.push_back(std::move(quote));
  }
  return kept;
}

std::vector<StatementInput> read_statements(std::istream& in) {
  std::vector<StatementInput> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      fail(ErrorCode::kInvalidArgument, "statements line " + std::to_string(line_no) + ": expected {\"group\",\"text\"}");
    }
    StatementInput s;
    s.text = std::string(text::trim(j["text"].get<std::string>()));
    s.group = j.contains("group") && j["group"].is_string() ? j["group"].get<std::string>() : "";
    for (const auto& [k, v] : j.items()) {
      if (k != "text") s.tags[k] = v;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<NoveltyVerdict> screen_all(const std::vector<StatementInput>& inputs, const Corpus& corpus,
                                       const PromptSet& prompts, llm::LlmGateway& gateway) {
  corpus.validate();
  std::vector<NoveltyVerdict> out(inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < inputs.size();) {
      auto& v = out[i];
      char id[32];
      std::snprintf(id, sizeof(id), "st-%04zu", i + 1);
      v.id = id;
      v.group = inputs[i].group;
      v.statement = inputs[i].text;
      v.tags = inputs[i].tags;
      v.prompt_manifest = prompts.manifest_hash;
      v.votes = screen(v.statement, corpus, prompts, gateway);
      if (v.candidate()) {
        std::vector<Quote> dropped;
        v.quotes = retrieve_quotes(v.statement, corpus, prompts, gateway, &dropped);
        v.dropped_quotes = dropped.size();
      } else {
        v.final = Final::kNotNovel;
        v.reason = Reason::kScreenedOut;
      }
    }
  };
  const auto n = std::max<std::size_t>(1, std::min(gateway.config().max_inflight, inputs.size()));
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return out;
}

}  // namespace ppad::novelty

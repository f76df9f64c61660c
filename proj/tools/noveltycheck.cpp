// noveltycheck: screens policy statements against a reference corpus,
// collects human adjudication and reports novelty per group.
//
//   noveltycheck screen --statements s.jsonl --corpus dir --out verdicts.json
//   noveltycheck adjudicate --verdicts verdicts.json [--annotations file]
//   noveltycheck report --verdicts verdicts.json [--group-by key]

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"
#include "policypad/llm/gateway.hpp"
#include "policypad/llm/mock_provider.hpp"
#include "policypad/novelty/adjudicate.hpp"
#include "policypad/novelty/novelty.hpp"

namespace nv = ppad::novelty;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) ppad::fail(ppad::ErrorCode::kNotFound, "cannot open '" + path + "'");
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) ppad::fail(ppad::ErrorCode::kInvalidArgument, "'" + path + "' is not valid JSON");
  return j;
}

void write_verdicts(const std::string& path, const std::vector<nv::NoveltyVerdict>& verdicts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ppad::fail(ppad::ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  out << nv::verdicts_to_json(verdicts).dump(2) << "\n";
}

nv::Decision ask(std::istream& in, std::ostream& out, const std::string& who) {
  for (;;) {
    out << "  " << who << " decision [n]ovel / [x] not novel / [a]bstain: " << std::flush;
    std::string line;
    if (!std::getline(in, line)) ppad::fail(ppad::ErrorCode::kPrecondition, "input ended during adjudication");
    const auto t = ppad::text::trim(line);
    if (t == "n" || t == "novel") return nv::Decision::kNovel;
    if (t == "x" || t == "not-novel") return nv::Decision::kNotNovel;
    if (t == "a" || t == "abstain") return nv::Decision::kAbstain;
  }
}

std::string ask_line(std::istream& in, std::ostream& out, const std::string& prompt) {
  out << "  " << prompt << ": " << std::flush;
  std::string line;
  std::getline(in, line);
  return std::string(ppad::text::trim(line));
}

// Walks each screened-in candidate with two annotators at the terminal.
std::vector<nv::AnnotationRecord> collect_interactively(const std::vector<nv::NoveltyVerdict>& verdicts,
                                                        std::istream& in, std::ostream& out) {
  std::vector<nv::AnnotationRecord> records;
  const auto a = ask_line(in, out, "first annotator name");
  const auto b = ask_line(in, out, "second annotator name");
  for (const auto& v : verdicts) {
    if (!v.candidate()) continue;
    out << "\n[" << v.id << "] " << v.statement << "\n";
    for (const auto& q : v.quotes) out << "    > (" << q.source_id << ") " << q.text << "\n";
    for (const auto& pv : v.votes) out << "    " << pv.prompt_id << ": " << pv.justification << "\n";
    const auto da = ask(in, out, a);
    const auto db = ask(in, out, b);
    records.push_back({v.id, a, 1, da, ""});
    records.push_back({v.id, b, 1, db, ""});
    if (da == db && da != nv::Decision::kAbstain) continue;
    out << "  Annotators disagree. Discuss, then annotate again.\n";
    const auto note = ask_line(in, out, "discussion note");
    records.push_back({v.id, a, 2, ask(in, out, a), note});
    records.push_back({v.id, b, 2, ask(in, out, b), note});
  }
  return records;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Novelty screening and adjudication for policy statements"};
  app.require_subcommand(1);

  std::string statements, corpus_dir, out_path = "verdicts.json", prompts_dir, mock_config, provider = "mock",
                                      config_file;
  auto* screen = app.add_subcommand("screen", "Run the three-prompt LLM screen and retrieve quotes");
  screen->add_option("--statements", statements, "JSON lines {group, text}")->required();
  screen->add_option("--corpus", corpus_dir, "Directory of plain-text reference policies")->required();
  screen->add_option("--out", out_path, "Verdicts file to write")->capture_default_str();
  screen->add_option("--prompts", prompts_dir, "Prompt asset directory (default: bundled prompts)");
  screen->add_option("--provider", provider)->check(CLI::IsMember({"mock", "remote"}))->capture_default_str();
  screen->add_option("--config", config_file, "Provider config JSON");
  screen->add_option("--mock-config", mock_config, "Mock provider tables (noveltyVotes, quotes)");

  std::string verdicts_path, annotations_path, adjudicated_out, group_by = "group";
  auto* adjudicate = app.add_subcommand("adjudicate", "Apply two-annotator adjudication to screened candidates");
  adjudicate->add_option("--verdicts", verdicts_path, "Verdicts file from screen")->required();
  adjudicate->add_option("--annotations", annotations_path, "Annotation records; omit to annotate interactively");
  adjudicate->add_option("--out", adjudicated_out, "Where to write adjudicated verdicts (default: in place)");

  auto* report = app.add_subcommand("report", "Novel count and percentage per group");
  report->add_option("--verdicts", verdicts_path, "Adjudicated verdicts file")->required();
  report->add_option("--group-by", group_by, "Statement field to group by")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*screen) {
      auto corpus = nv::Corpus::load_dir(corpus_dir);
      corpus.validate();
      auto prompts = prompts_dir.empty() ? nv::PromptSet::load() : nv::PromptSet::load(prompts_dir);
      std::ifstream in(statements);
      if (!in) ppad::fail(ppad::ErrorCode::kNotFound, "cannot open '" + statements + "'");
      auto inputs = nv::read_statements(in);

      const auto kind = ppad::llm::provider_kind_from_string(provider);
      auto cfg = kind == ppad::llm::ProviderKind::kMock
                     ? ppad::llm::ProviderConfig::mock_defaults()
                     : ppad::llm::ProviderConfig::from_env(kind, ppad::llm::ProviderConfig::process_env());
      if (!config_file.empty()) cfg.merge(read_json_file(config_file));
      std::shared_ptr<ppad::llm::Provider> backend;
      if (cfg.provider == ppad::llm::ProviderKind::kMock) {
        backend = std::make_shared<ppad::llm::MockProvider>(
            mock_config.empty() ? ppad::llm::MockConfig{}
                                : ppad::llm::MockConfig::from_json(read_json_file(mock_config)));
      } else {
        backend = ppad::llm::make_provider(cfg.provider);
      }
      ppad::llm::LlmGateway gateway(cfg, backend);
      auto verdicts = nv::screen_all(inputs, corpus, prompts, gateway);
      write_verdicts(out_path, verdicts);
      std::size_t candidates = 0, dropped = 0;
      for (const auto& v : verdicts) {
        candidates += v.candidate() ? 1 : 0;
        dropped += v.dropped_quotes;
      }
      std::cout << "screened " << verdicts.size() << " statement(s): " << candidates
                << " passed all three prompts; " << dropped << " non-verbatim quote(s) dropped\n"
                << "prompts " << prompts.version << " (" << prompts.manifest_hash << ")\n";
    } else if (*adjudicate) {
      auto verdicts = nv::verdicts_from_json(read_json_file(verdicts_path));
      std::vector<nv::AnnotationRecord> records;
      if (annotations_path.empty()) {
        records = collect_interactively(verdicts, std::cin, std::cout);
      } else {
        std::ifstream in(annotations_path);
        if (!in) ppad::fail(ppad::ErrorCode::kNotFound, "cannot open '" + annotations_path + "'");
        records = nv::read_annotations(in);
      }
      auto result = nv::adjudicate(std::move(verdicts), records);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      write_verdicts(adjudicated_out.empty() ? verdicts_path : adjudicated_out, result.verdicts);
      std::cout << nv::format_report(nv::compute_stats(result.verdicts), "group");
    } else if (*report) {
      auto verdicts = nv::verdicts_from_json(read_json_file(verdicts_path));
      std::cout << nv::format_report(nv::compute_stats(verdicts, group_by), group_by);
    }
  } catch (const std::exception& e) {
    std::cerr << "noveltycheck: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "policypad/novelty/adjudicate.hpp"

#include <cstdio>
#include <istream>
#include <map>
#include <sstream>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"

namespace ppad::novelty {

using nlohmann::json;

namespace {

AnnotationRecord record_from(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "annotation must be an object");
  AnnotationRecord r;
  r.verdict_id = j.at("id").get<std::string>();
  r.annotator = j.at("annotator").get<std::string>();
  r.round = j.value("round", 1);
  if (r.round != 1 && r.round != 2) fail(ErrorCode::kInvalidArgument, "annotation round must be 1 or 2");
  r.decision = decision_from_string(j.at("decision").get<std::string>());
  r.note = j.value("note", "");
  return r;
}

// Latest record per annotator for one candidate and round, in annotator
// order so results do not depend on file order.
std::vector<Annotation> round_of(const std::vector<AnnotationRecord>& records, const std::string& id, int round) {
  std::map<std::string, Annotation> by_annotator;
  for (const auto& r : records) {
    if (r.verdict_id == id && r.round == round) by_annotator[r.annotator] = {r.annotator, r.decision, r.note};
  }
  std::vector<Annotation> out;
  for (auto& [_, a] : by_annotator) out.push_back(std::move(a));
  return out;
}

bool agree(const std::vector<Annotation>& a, Decision d) {
  return a.size() == 2 && a[0].decision == d && a[1].decision == d;
}

}  // namespace

std::vector<AnnotationRecord> read_annotations(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto all = ss.str();
  std::vector<AnnotationRecord> out;
  auto whole = json::parse(all, nullptr, false);
  try {
    if (!whole.is_discarded() && whole.is_array()) {
      for (const auto& j : whole) out.push_back(record_from(j));
      return out;
    }
    std::istringstream lines(all);
    std::string line;
    while (std::getline(lines, line)) {
      if (text::is_blank(line)) continue;
      auto j = json::parse(line, nullptr, false);
      if (j.is_discarded()) fail(ErrorCode::kInvalidArgument, "annotation line is not JSON: " + line);
      out.push_back(record_from(j));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed annotation: ") + e.what());
  }
  return out;
}

json to_json(const AnnotationRecord& r) {
  json j = {{"id", r.verdict_id}, {"annotator", r.annotator}, {"round", r.round}, {"decision", to_string(r.decision)}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Adjudication adjudicate(std::vector<NoveltyVerdict> verdicts, const std::vector<AnnotationRecord>& records) {
  Adjudication out;
  for (auto& v : verdicts) {
    v.first_round.clear();
    v.annotations.clear();
    v.final.reset();
    v.reason.reset();
    if (!v.candidate()) {
      v.quotes.clear();
      v.final = Final::kNotNovel;
      v.reason = Reason::kScreenedOut;
      continue;
    }
    auto first = round_of(records, v.id, 1);
    if (first.size() < 2) {
      v.annotations = std::move(first);
      out.warnings.push_back(v.id + ": needs two annotations, has " + std::to_string(v.annotations.size()) +
                             "; left pending");
      continue;
    }
    if (first.size() > 2) first.resize(2);
    if (agree(first, Decision::kNovel) || agree(first, Decision::kNotNovel)) {
      v.final = first[0].decision == Decision::kNovel ? Final::kNovel : Final::kNotNovel;
      v.reason = Reason::kAnnotatorConsensus;
      v.annotations = std::move(first);
      continue;
    }
    // Disagreement: one discussion round, then re-annotation.
    auto second = round_of(records, v.id, 2);
    if (second.size() < 2) {
      v.annotations = std::move(first);
      out.warnings.push_back(v.id + ": annotators disagree and the discussion round has not been re-annotated; left pending");
      continue;
    }
    if (second.size() > 2) second.resize(2);
    v.first_round = std::move(first);
    if (agree(second, Decision::kNovel) || agree(second, Decision::kNotNovel)) {
      v.final = second[0].decision == Decision::kNovel ? Final::kNovel : Final::kNotNovel;
      v.reason = Reason::kAnnotatorConsensus;
    } else {
      v.final = Final::kNotNovel;
      v.reason = Reason::kAnnotatorDefault;
    }
    v.annotations = std::move(second);
  }
  out.verdicts = std::move(verdicts);
  return out;
}

std::vector<GroupStats> compute_stats(const std::vector<NoveltyVerdict>& verdicts, const std::string& key) {
  std::map<std::string, GroupStats> by_group;
  std::vector<std::string> order;
  for (const auto& v : verdicts) {
    std::string g;
    if (key == "group") {
      g = v.group;
    } else if (v.tags.contains(key)) {
      g = v.tags[key].is_string() ? v.tags[key].get<std::string>() : v.tags[key].dump();
    }
    if (g.empty()) g = "(none)";
    auto [it, fresh] = by_group.try_emplace(g);
    if (fresh) {
      it->second.group = g;
      order.push_back(g);
    }
    auto& s = it->second;
    if (!v.final) {
      ++s.pending;
      continue;
    }
    ++s.total;
    if (*v.final == Final::kNovel) ++s.novel;
  }
  std::vector<GroupStats> out;
  for (const auto& g : order) out.push_back(by_group[g]);
  return out;
}

std::string format_percent(std::size_t novel, std::size_t total) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", total == 0 ? 0.0 : 100.0 * static_cast<double>(novel) / total);
  return buf;
}

std::string format_report(const std::vector<GroupStats>& stats, const std::string& key) {
  std::string out = "novelty by " + key + "\n";
  std::size_t novel = 0, total = 0;
  for (const auto& s : stats) {
    out += "  " + s.group + ": " + std::to_string(s.novel) + " of " + std::to_string(s.total) + " novel (" +
           format_percent(s.novel, s.total) + ")";
    if (s.pending) out += ", " + std::to_string(s.pending) + " pending (excluded)";
    out += "\n";
    novel += s.novel;
    total += s.total;
  }
  out += "  all: " + std::to_string(novel) + " of " + std::to_string(total) + " novel (" + format_percent(novel, total) +
         ")\n";
  return out;
}

}  // namespace ppad::novelty

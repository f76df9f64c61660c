#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "policypad/novelty/novelty.hpp"

namespace ppad::novelty {

// One annotator's call on one candidate. Round 1 is the independent
// annotation; round 2 is the re-annotation after the discussion.
struct AnnotationRecord {
  std::string verdict_id;
  std::string annotator;
  int round = 1;
  Decision decision = Decision::kAbstain;
  std::string note;
};

// Accepts a JSON array or JSON lines of
// {"id":..., "annotator":..., "round":1|2, "decision":"novel|not-novel|abstain", "note":...}.
std::vector<AnnotationRecord> read_annotations(std::istream& in);
nlohmann::json to_json(const AnnotationRecord& r);

struct Adjudication {
  std::vector<NoveltyVerdict> verdicts;
  std::vector<std::string> warnings;  // one per pending candidate
};

// Screened-out statements are final not-novel. A candidate needs two
// annotators: agreement decides; disagreement (abstain included) goes to a
// discussion round whose re-annotation decides if it agrees and otherwise
// defaults to not-novel. Candidates lacking annotations stay pending.
Adjudication adjudicate(std::vector<NoveltyVerdict> verdicts, const std::vector<AnnotationRecord>& records);

struct GroupStats {
  std::string group;
  std::size_t total = 0;  // decided statements
  std::size_t novel = 0;
  std::size_t pending = 0;
};

// Groups by `key`: "group" or any tag name; missing keys group as "(none)".
std::vector<GroupStats> compute_stats(const std::vector<NoveltyVerdict>& verdicts, const std::string& key = "group");

// "51.9%": one decimal, 0.0% when nothing was decided.
std::string format_percent(std::size_t novel, std::size_t total);
std::string format_report(const std::vector<GroupStats>& stats, const std::string& key = "group");

}  // namespace ppad::novelty

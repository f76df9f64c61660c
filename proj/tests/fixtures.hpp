// Generated inputs shared by unit tests and the acceptance run.
#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "policypad/doc/replica.hpp"
#include "policypad/llm/mock_provider.hpp"
#include "policypad/novelty/adjudicate.hpp"
#include "policypad/novelty/novelty.hpp"
#include "policypad/policy/policy_text.hpp"

namespace ppad::testing {

// --- drafting blocks ----------------------------------------------------------------

struct DraftingDoc {
  std::vector<doc::DocNode> nodes;
  std::set<std::string> outside;   // statement texts that must reach the model
  std::set<std::string> inside;    // statement texts inside drafting blocks
  std::set<std::string> headings;  // out-of-block heading texts
};

// Lines of unique tokens with drafting markers dropped between random
// lines, sometimes unbalanced. The expected partition is worked out by
// counting marker depth the way a reader would, independently of the
// block parser.
inline DraftingDoc random_drafting_doc(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DraftingDoc d;
  int depth = 0;
  const auto lines = 5 + rng() % 25;
  for (std::size_t i = 0; i < lines; ++i) {
    for (auto markers = rng() % 3; markers > 0; --markers) {
      if (rng() % 2) {
        d.nodes.push_back(doc::DocNode::drafting_open());
        ++depth;
      } else {
        d.nodes.push_back(doc::DocNode::drafting_close());
        if (depth > 0) --depth;
      }
    }
    const std::string token = "tok" + std::to_string(seed) + "x" + std::to_string(i) + " words here";
    const auto kind = rng() % 4;
    if (kind == 0) {
      d.nodes.push_back(doc::DocNode::heading(1 + static_cast<int>(rng() % 3)));
    } else if (kind == 1) {
      d.nodes.push_back(doc::DocNode::list_item());
    }
    for (char c : token) d.nodes.push_back(doc::DocNode::text_run(std::string(1, c)));
    d.nodes.push_back(doc::DocNode::text_run("\n"));
    if (depth > 0) {
      d.inside.insert(token);
    } else if (kind == 0) {
      d.headings.insert(token);
    } else {
      d.outside.insert(token);
    }
  }
  return d;
}

inline std::vector<doc::MaterializedNode> materialize_nodes(const std::vector<doc::DocNode>& nodes) {
  doc::Replica r("gen");
  r.insert_run(0, nodes);
  return r.materialize();
}

// --- novelty fixture ------------------------------------------------------------------

enum class Path { kVerbatim, kSplitVote, kAgreeNovel, kRound2Novel, kAgreeNotNovel, kPersistentSplit };

struct FixtureStatement {
  std::string group;
  std::string text;
  Path path;
};

struct NoveltyFixture {
  novelty::Corpus corpus;
  std::vector<FixtureStatement> statements;
  llm::MockConfig mock;
  std::set<std::string> fabricated_quotes;

  std::vector<novelty::StatementInput> inputs() const {
    std::vector<novelty::StatementInput> out;
    for (const auto& s : statements) out.push_back({s.group, s.text, {{"group", s.group}}});
    return out;
  }
  // Expected novel count per group from the construction alone.
  std::size_t expected_novel(const std::string& group) const {
    std::size_t n = 0;
    for (const auto& s : statements) {
      n += s.group == group && (s.path == Path::kAgreeNovel || s.path == Path::kRound2Novel) ? 1 : 0;
    }
    return n;
  }
  std::size_t group_size(const std::string& group) const {
    std::size_t n = 0;
    for (const auto& s : statements) n += s.group == group ? 1 : 0;
    return n;
  }
};

struct GroupPlan {
  std::string name;
  std::size_t verbatim, split, agree_novel, round2_novel, agree_not, persistent;
};

// Group A: 77 statements, 40 end novel. Group B: 55 statements, 10 end novel.
inline NoveltyFixture build_novelty_fixture() {
  NoveltyFixture f;
  const char* topics[] = {"crisis lines", "medication", "confidentiality", "self harm", "privacy",
                          "legal advice", "tenancy", "employment"};
  std::vector<std::string> rules;
  for (int d = 0; d < 3; ++d) {
    std::string text;
    for (int i = 0; i < 14; ++i) {
      const int n = d * 14 + i;
      std::string rule = "Reference rule " + std::to_string(n) + " says the assistant handles " +
                         topics[n % 8] + " with care and points to qualified professionals.";
      rules.push_back(rule);
      text += rule + (i % 3 == 2 ? "\n" : " ");
    }
    f.corpus.documents.push_back({"policy-" + std::string(1, static_cast<char>('a' + d)) + ".txt", text});
  }

  std::size_t rule_cursor = 0;
  auto add_group = [&](const GroupPlan& g) {
    auto push = [&](Path p, std::size_t count, const char* stem) {
      for (std::size_t i = 0; i < count; ++i) {
        std::string text;
        if (p == Path::kVerbatim) {
          text = rules.at(rule_cursor++);
        } else {
          text = "Group " + g.name + " " + stem + " " + std::to_string(i) + ": the assistant should ask about " +
                 topics[i % 8] + " before giving a referral.";
        }
        f.statements.push_back({g.name, text, p});
      }
    };
    push(Path::kVerbatim, g.verbatim, "verbatim");
    push(Path::kSplitVote, g.split, "split");
    push(Path::kAgreeNovel, g.agree_novel, "agreed");
    push(Path::kRound2Novel, g.round2_novel, "discussed");
    push(Path::kAgreeNotNovel, g.agree_not, "rejected");
    push(Path::kPersistentSplit, g.persistent, "contested");
  };
  add_group({"A", 10, 12, 35, 5, 8, 7});
  add_group({"B", 20, 15, 8, 2, 5, 5});

  std::size_t split_index = 0;
  for (const auto& s : f.statements) {
    if (s.path == Path::kSplitVote) {
      std::array<bool, 3> v{true, true, true};
      v[split_index++ % 3] = false;
      f.mock.novelty_votes[s.text] = v;
    }
  }
  // Planted quotes on some candidates: one real excerpt and one fabricated.
  std::size_t planted = 0;
  for (const auto& s : f.statements) {
    if (s.path != Path::kAgreeNovel || planted >= 6) continue;
    const auto& real = rules.at(20 + planted);
    const auto& doc = f.corpus.documents.at((20 + planted) / 14);
    const std::string fake = "The assistant must never discuss " + std::to_string(planted) + " invented topics.";
    f.fabricated_quotes.insert(fake);
    f.mock.quotes[s.text] = {{doc.source_id, real.substr(0, real.size() - 1)}, {doc.source_id, fake}};
    ++planted;
  }
  return f;
}

// Two annotators, following each statement's planned path.
inline std::vector<novelty::AnnotationRecord> fixture_annotations(const NoveltyFixture& f,
                                                                  const std::vector<novelty::NoveltyVerdict>& vs) {
  using novelty::Decision;
  std::vector<novelty::AnnotationRecord> out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const auto& id = vs[i].id;
    auto both = [&](int round, Decision a, Decision b) {
      out.push_back({id, "ann-1", round, a, round == 2 ? "discussed" : ""});
      out.push_back({id, "ann-2", round, b, round == 2 ? "discussed" : ""});
    };
    switch (f.statements[i].path) {
      case Path::kAgreeNovel: both(1, Decision::kNovel, Decision::kNovel); break;
      case Path::kRound2Novel:
        both(1, Decision::kNovel, Decision::kNotNovel);
        both(2, Decision::kNovel, Decision::kNovel);
        break;
      case Path::kAgreeNotNovel: both(1, Decision::kNotNovel, Decision::kNotNovel); break;
      case Path::kPersistentSplit:
        both(1, Decision::kNovel, Decision::kAbstain);
        both(2, Decision::kNovel, Decision::kNotNovel);
        break;
      default: break;  // screened out; nothing to annotate
    }
  }
  return out;
}

}  // namespace ppad::testing

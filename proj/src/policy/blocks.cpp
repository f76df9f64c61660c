#include "policypad/policy/blocks.hpp"

#include "policypad/core/text.hpp"

namespace ppad::policy {

using doc::NodeKind;

namespace {

class BlockBuilder {
 public:
  explicit BlockBuilder(const std::vector<doc::MaterializedNode>& nodes) : nodes_(nodes) {}

  std::vector<Block> run() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i].node;
      switch (n.kind) {
        case NodeKind::kHeading:
          flush();
          start(BlockKind::kHeading, i);
          cur_.level = n.level;
          break;
        case NodeKind::kListItem:
          flush();
          start(BlockKind::kListItem, i);
          break;
        case NodeKind::kDraftingOpen:
          flush();
          ++draft_depth_;
          break;
        case NodeKind::kDraftingClose:
          flush();
          if (draft_depth_ > 0) --draft_depth_;
          break;
        case NodeKind::kScenarioWidget:
          touch(i);
          cur_.widgets.push_back(i);
          break;
        case NodeKind::kTextRun: {
          std::string_view t = n.text;
          std::size_t nl;
          while ((nl = t.find('\n')) != std::string_view::npos) {
            touch(i);
            cur_.text.append(t.substr(0, nl));
            flush();
            t.remove_prefix(nl + 1);
          }
          if (!t.empty()) {
            touch(i);
            cur_.text.append(t);
          }
          break;
        }
      }
    }
    flush();
    return std::move(out_);
  }

 private:
  void start(BlockKind kind, std::size_t i) {
    open_ = true;
    cur_ = Block{};
    cur_.kind = kind;
    cur_.first_node = cur_.last_node = i;
    cur_.marker = nodes_[i].id;
    cur_.in_draft = draft_depth_ > 0;
  }

  void touch(std::size_t i) {
    if (!open_) start(BlockKind::kParagraph, i);
    cur_.last_node = i;
  }

  void flush() {
    if (!open_) return;
    open_ = false;
    cur_.text = std::string(text::trim(cur_.text));
    if (cur_.kind == BlockKind::kParagraph && cur_.text.empty() && cur_.widgets.empty()) return;
    if (cur_.kind == BlockKind::kHeading) {
      if (cur_.level == 1) in_heuristics_ = cur_.text == kHeuristicsHeading;
      section_ = cur_.text;
      cur_.in_heuristics = in_heuristics_;
    } else {
      cur_.in_heuristics = in_heuristics_;
    }
    cur_.section = section_;
    out_.push_back(std::move(cur_));
  }

  const std::vector<doc::MaterializedNode>& nodes_;
  std::vector<Block> out_;
  Block cur_;
  bool open_ = false;
  int draft_depth_ = 0;
  bool in_heuristics_ = false;
  std::string section_;
};

}  // namespace

std::vector<Block> parse_blocks(const std::vector<doc::MaterializedNode>& nodes) {
  return BlockBuilder(nodes).run();
}

std::size_t block_containing(const std::vector<Block>& blocks, std::size_t node) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].first_node <= node && node <= blocks[b].last_node) return b;
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace ppad::policy

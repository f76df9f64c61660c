#pragma once

#include <string>
#include <vector>

#include "policypad/doc/doc_state.hpp"

namespace ppad::policy {

inline constexpr std::string_view kHeuristicsHeading = "Heuristics";

enum class BlockKind { kParagraph, kHeading, kListItem };

// A block is the text between two boundaries. Boundaries are heading and
// list-item markers, drafting markers, and newlines inside text runs.
struct Block {
  BlockKind kind = BlockKind::kParagraph;
  int level = 0;                // headings only
  std::string text;             // trimmed
  std::string section;          // nearest preceding heading text
  bool in_draft = false;
  bool in_heuristics = false;
  std::size_t first_node = 0;   // index into the materialized list
  std::size_t last_node = 0;    // inclusive
  doc::PositionId marker;       // heading/list-item marker id, else first node id
  std::vector<std::size_t> widgets;  // node indices of widgets inside
};

// Walks the materialized list once. Blank paragraphs are dropped; blank
// list items and headings are kept (a fresh list item is typed into).
std::vector<Block> parse_blocks(const std::vector<doc::MaterializedNode>& nodes);

// Index of the block containing node index `node`, or npos.
std::size_t block_containing(const std::vector<Block>& blocks, std::size_t node);

}  // namespace ppad::policy

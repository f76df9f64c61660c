#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "policypad/doc/position.hpp"

namespace ppad::doc {

enum class NodeKind {
  kTextRun,
  kScenarioWidget,
  kDraftingOpen,
  kDraftingClose,
  kHeading,
  kListItem,
};

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(std::string_view s);

struct DocNode {
  NodeKind kind = NodeKind::kTextRun;
  std::string text;          // text-run
  std::string scenario_id;   // scenario-widget
  bool flagged = false;      // scenario-widget
  int level = 0;             // heading, 1..3
  // Free-form metadata, e.g. "suggestion-id" on accepted suggestion blocks.
  std::map<std::string, std::string> attrs;

  bool operator==(const DocNode&) const = default;

  static DocNode text_run(std::string text);
  static DocNode widget(std::string scenario_id, bool flagged = false);
  static DocNode heading(int level);
  static DocNode list_item();
  static DocNode drafting_open();
  static DocNode drafting_close();
};

struct OpId {
  ReplicaId replica;
  std::uint64_t counter = 0;

  // Lamport order: counter first, replica breaks ties.
  friend std::strong_ordering operator<=>(const OpId& a, const OpId& b) {
    if (auto c = a.counter <=> b.counter; c != 0) return c;
    return a.replica <=> b.replica;
  }
  friend bool operator==(const OpId&, const OpId&) = default;
};

enum class OpKind { kInsert, kDelete, kSetPayload };

std::string_view to_string(OpKind kind);

struct DocOp {
  OpId id;
  OpKind kind = OpKind::kInsert;
  PositionId target;
  std::optional<DocNode> node;

  bool operator==(const DocOp&) const = default;
};

}  // namespace ppad::doc

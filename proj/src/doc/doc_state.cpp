#include "policypad/doc/doc_state.hpp"

#include <algorithm>

namespace ppad::doc {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kTextRun: return "text-run";
    case NodeKind::kScenarioWidget: return "scenario-widget";
    case NodeKind::kDraftingOpen: return "drafting-block-open";
    case NodeKind::kDraftingClose: return "drafting-block-close";
    case NodeKind::kHeading: return "heading";
    case NodeKind::kListItem: return "list-item";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
  for (auto k : {NodeKind::kTextRun, NodeKind::kScenarioWidget, NodeKind::kDraftingOpen,
                 NodeKind::kDraftingClose, NodeKind::kHeading, NodeKind::kListItem}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kInsert: return "insert";
    case OpKind::kDelete: return "delete";
    case OpKind::kSetPayload: return "set-payload";
  }
  return "?";
}

DocNode DocNode::text_run(std::string text) {
  DocNode n;
  n.kind = NodeKind::kTextRun;
  n.text = std::move(text);
  return n;
}

DocNode DocNode::widget(std::string scenario_id, bool flagged) {
  DocNode n;
  n.kind = NodeKind::kScenarioWidget;
  n.scenario_id = std::move(scenario_id);
  n.flagged = flagged;
  return n;
}

DocNode DocNode::heading(int level) {
  DocNode n;
  n.kind = NodeKind::kHeading;
  n.level = level;
  return n;
}

DocNode DocNode::list_item() {
  DocNode n;
  n.kind = NodeKind::kListItem;
  return n;
}

DocNode DocNode::drafting_open() {
  DocNode n;
  n.kind = NodeKind::kDraftingOpen;
  return n;
}

DocNode DocNode::drafting_close() {
  DocNode n;
  n.kind = NodeKind::kDraftingClose;
  return n;
}

namespace {

bool node_well_formed(const DocNode& node, std::string* reason) {
  auto bad = [&](const char* why) {
    if (reason) *reason = why;
    return false;
  };
  switch (node.kind) {
    case NodeKind::kTextRun:
      if (node.text.empty()) return bad("empty text run");
      break;
    case NodeKind::kScenarioWidget:
      if (node.scenario_id.empty()) return bad("widget without scenario id");
      break;
    case NodeKind::kHeading:
      if (node.level < 1 || node.level > 3) return bad("heading level outside 1..3");
      break;
    default:
      break;
  }
  return true;
}

}  // namespace

ApplyOutcome DocState::apply(const DocOp& op, std::string* reason) {
  auto reject = [&](const char* why) {
    if (reason) *reason = why;
    return ApplyOutcome::kRejected;
  };
  if (op.id.replica.empty()) return reject("op without replica id");
  if (applied_.count(op.id)) return ApplyOutcome::kDuplicate;
  if (!op.target.is_allocatable()) return reject("target is not an allocatable position");

  switch (op.kind) {
    case OpKind::kInsert: {
      if (!op.node) return reject("insert without node");
      if (!node_well_formed(*op.node, reason)) return ApplyOutcome::kRejected;
      // Inserts and payload updates share one last-writer-wins register, so
      // a set-payload that overtook its insert still wins when newer.
      Entry& e = entries_[op.target];
      if (!e.node || !e.payload_writer || op.id > *e.payload_writer) {
        e.node = op.node;
        e.payload_writer = op.id;
      }
      break;
    }
    case OpKind::kDelete: {
      entries_[op.target].tombstone = true;
      break;
    }
    case OpKind::kSetPayload: {
      if (!op.node) return reject("set-payload without node");
      if (!node_well_formed(*op.node, reason)) return ApplyOutcome::kRejected;
      Entry& e = entries_[op.target];
      if (!e.payload_writer || op.id > *e.payload_writer) {
        e.node = op.node;
        e.payload_writer = op.id;
      }
      break;
    }
    default:
      return reject("unknown op kind");
  }
  applied_.insert(op.id);
  max_counter_ = std::max(max_counter_, op.id.counter);
  return ApplyOutcome::kApplied;
}

std::vector<MaterializedNode> DocState::materialize() const {
  std::vector<MaterializedNode> out;
  int open_drafts = 0;
  for (const auto& [id, e] : entries_) {
    if (e.tombstone || !e.node) continue;
    if (e.node->kind == NodeKind::kDraftingOpen) {
      ++open_drafts;
    } else if (e.node->kind == NodeKind::kDraftingClose) {
      if (open_drafts == 0) continue;  // unmatched close: dropped
      --open_drafts;
    }
    out.push_back({id, *e.node, false});
  }
  for (; open_drafts > 0; --open_drafts) {
    out.push_back({PositionId::end(), DocNode::drafting_close(), true});
  }
  return out;
}

bool DocState::contains_live(const PositionId& id) const {
  auto it = entries_.find(id);
  return it != entries_.end() && !it->second.tombstone && it->second.node;
}

const DocNode* DocState::find(const PositionId& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end() || it->second.tombstone || !it->second.node) return nullptr;
  return &*it->second.node;
}

PositionId DocState::next_slot(const PositionId& id) const {
  auto it = entries_.upper_bound(id);
  return it == entries_.end() ? PositionId::end() : it->first;
}

std::size_t DocState::live_count() const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const auto& kv) {
    return !kv.second.tombstone && kv.second.node;
  }));
}

void DocState::compact() {
  std::erase_if(entries_, [](const auto& kv) { return kv.second.tombstone; });
}

void DocState::restore(std::map<PositionId, Entry> entries, std::set<OpId> applied) {
  entries_ = std::move(entries);
  applied_ = std::move(applied);
  max_counter_ = 0;
  for (const auto& id : applied_) max_counter_ = std::max(max_counter_, id.counter);
}

DocState apply(DocState state, const DocOp& op) {
  state.apply(op);
  return state;
}

std::string plain_text(const std::vector<MaterializedNode>& nodes) {
  std::string out;
  for (const auto& n : nodes) {
    if (n.node.kind == NodeKind::kTextRun) out += n.node.text;
  }
  return out;
}

}  // namespace ppad::doc

#include "policypad/doc/replica.hpp"

#include <algorithm>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"

namespace ppad::doc {

Replica::Replica(ReplicaId id, DocState state)
    : id_(std::move(id)), state_(std::move(state)), clock_(state_.max_counter()) {
  if (id_.empty()) fail(ErrorCode::kInvalidArgument, "replica id must be non-empty");
}

OpId Replica::next_op_id() { return OpId{id_, ++clock_}; }

std::size_t Replica::size() const {
  auto nodes = state_.materialize();
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(),
                                                [](const auto& n) { return !n.synthetic; }));
}

std::pair<PositionId, PositionId> Replica::gap(std::size_t index) const {
  auto nodes = state_.materialize();
  std::erase_if(nodes, [](const auto& n) { return n.synthetic; });
  if (index > nodes.size()) fail(ErrorCode::kInvalidArgument, "insert index out of range");
  PositionId left = index == 0 ? PositionId::begin() : nodes[index - 1].id;
  return {left, state_.next_slot(left)};
}

DocOp Replica::insert(std::size_t index, DocNode node) {
  auto [left, right] = gap(index);
  DocOp op{next_op_id(), OpKind::kInsert, {}, std::move(node)};
  op.target = allocate_between(left, right, id_, op.id.counter);
  state_.apply(op);
  return op;
}

std::vector<DocOp> Replica::insert_text(std::size_t index, std::string_view text) {
  std::vector<DocNode> nodes;
  for (auto& cp : text::split_code_points(text)) nodes.push_back(DocNode::text_run(std::move(cp)));
  return insert_run(index, nodes);
}

std::vector<DocOp> Replica::insert_run(std::size_t index, const std::vector<DocNode>& nodes) {
  auto [left, right] = gap(index);
  (void)right;
  return insert_run_after(left, nodes);
}

std::vector<DocOp> Replica::insert_run_after(const PositionId& after,
                                             const std::vector<DocNode>& nodes) {
  std::vector<DocOp> ops;
  if (nodes.empty()) return ops;
  PositionId left = after;
  PositionId right = state_.next_slot(left);
  if (nodes.size() == 1) {
    DocOp op{next_op_id(), OpKind::kInsert, {}, nodes.front()};
    op.target = allocate_between(left, right, id_, op.id.counter);
    state_.apply(op);
    ops.push_back(std::move(op));
    return ops;
  }
  std::size_t done = 0;
  while (done < nodes.size()) {
    // One parent per chunk of at most kDigitBase - 1 children.
    const PositionId parent = allocate_between(left, right, id_, clock_ + 1);
    const std::size_t chunk = std::min<std::size_t>(nodes.size() - done, kDigitBase - 1);
    for (std::size_t k = 0; k < chunk; ++k) {
      DocOp op{next_op_id(), OpKind::kInsert,
               parent.child(static_cast<std::uint32_t>(k + 1), id_), nodes[done + k]};
      state_.apply(op);
      ops.push_back(std::move(op));
    }
    done += chunk;
    left = ops.back().target;
    right = state_.next_slot(left);
  }
  return ops;
}

DocOp Replica::erase(std::size_t index) {
  auto nodes = state_.materialize();
  std::erase_if(nodes, [](const auto& n) { return n.synthetic; });
  if (index >= nodes.size()) fail(ErrorCode::kInvalidArgument, "erase index out of range");
  DocOp op{next_op_id(), OpKind::kDelete, nodes[index].id, std::nullopt};
  state_.apply(op);
  return op;
}

DocOp Replica::set_payload(std::size_t index, DocNode node) {
  auto nodes = state_.materialize();
  std::erase_if(nodes, [](const auto& n) { return n.synthetic; });
  if (index >= nodes.size()) fail(ErrorCode::kInvalidArgument, "index out of range");
  return set_payload(nodes[index].id, std::move(node));
}

DocOp Replica::set_payload(const PositionId& id, DocNode node) {
  DocOp op{next_op_id(), OpKind::kSetPayload, id, std::move(node)};
  state_.apply(op);
  return op;
}

ApplyOutcome Replica::receive(const DocOp& op) {
  clock_ = std::max(clock_, op.id.counter);
  return state_.apply(op);
}

}  // namespace ppad::doc

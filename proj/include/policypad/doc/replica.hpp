#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "policypad/doc/doc_state.hpp"

namespace ppad::doc {

// A DocState plus the identity and Lamport clock of one editing site.
// Local edits are expressed against the materialized sequence (indices) and
// come back as ops that the caller both applies locally (done here) and
// ships to the sequencer.
class Replica {
 public:
  explicit Replica(ReplicaId id, DocState state = {});

  const ReplicaId& id() const { return id_; }
  const DocState& state() const { return state_; }
  std::uint64_t clock() const { return clock_; }

  // Insert one node before materialized index `index` (size() appends).
  DocOp insert(std::size_t index, DocNode node);

  // Insert text before `index`. Multi-code-point text is allocated as one
  // word run: a fresh parent id between the neighbours, then one child per
  // code point, so concurrent runs in the same gap never interleave.
  std::vector<DocOp> insert_text(std::size_t index, std::string_view text);

  // Insert several nodes contiguously before `index`, one run subtree.
  std::vector<DocOp> insert_run(std::size_t index, const std::vector<DocNode>& nodes);

  // Insert a run right after the slot `after` (tombstones allowed).
  std::vector<DocOp> insert_run_after(const PositionId& after, const std::vector<DocNode>& nodes);

  DocOp erase(std::size_t index);
  DocOp set_payload(std::size_t index, DocNode node);
  DocOp set_payload(const PositionId& id, DocNode node);

  // Apply an op from elsewhere; advances the Lamport clock.
  ApplyOutcome receive(const DocOp& op);

  std::vector<MaterializedNode> materialize() const { return state_.materialize(); }
  std::size_t size() const;

 private:
  OpId next_op_id();
  // Identifiers of the live neighbours around materialized index `index`,
  // with `right` tightened to the next slot so tombstoned ids are never
  // reissued.
  std::pair<PositionId, PositionId> gap(std::size_t index) const;

  ReplicaId id_;
  DocState state_;
  std::uint64_t clock_ = 0;
};

}  // namespace ppad::doc

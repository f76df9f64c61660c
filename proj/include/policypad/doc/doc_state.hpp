#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "policypad/doc/node.hpp"
#include "policypad/doc/position.hpp"

namespace ppad::doc {

enum class ApplyOutcome { kApplied, kDuplicate, kRejected };

struct MaterializedNode {
  PositionId id;
  DocNode node;
  // True for closing markers added during materialization to pair an
  // unmatched drafting-block open; they carry the end-sentinel id.
  bool synthetic = false;

  bool operator==(const MaterializedNode&) const = default;
};

// One slot in the ordered identifier space. A slot can exist without a node
// when a delete or payload update arrived ahead of its insert.
struct Entry {
  std::optional<DocNode> node;
  std::optional<OpId> payload_writer;
  bool tombstone = false;

  bool operator==(const Entry&) const = default;
};

// Convergent replicated sequence of typed nodes. Inserts are keyed by
// PositionId, deletes leave tombstones (remove wins), payload updates are
// last-writer-wins on OpId. Every op is applied at most once.
class DocState {
 public:
  ApplyOutcome apply(const DocOp& op, std::string* reason = nullptr);

  std::vector<MaterializedNode> materialize() const;

  bool contains_live(const PositionId& id) const;
  bool contains(const PositionId& id) const { return entries_.count(id) != 0; }
  const DocNode* find(const PositionId& id) const;

  // Next slot after `id` in identifier order, tombstones included; the end
  // sentinel when none.
  PositionId next_slot(const PositionId& id) const;

  std::size_t slot_count() const { return entries_.size(); }
  std::size_t live_count() const;
  std::uint64_t max_counter() const { return max_counter_; }
  bool has_applied(const OpId& id) const { return applied_.count(id) != 0; }

  // Drops tombstones. Only safe when no in-flight op can still target them.
  void compact();

  const std::map<PositionId, Entry>& entries() const { return entries_; }
  const std::set<OpId>& applied() const { return applied_; }
  void restore(std::map<PositionId, Entry> entries, std::set<OpId> applied);

  bool operator==(const DocState& other) const { return entries_ == other.entries_; }

 private:
  std::map<PositionId, Entry> entries_;
  std::set<OpId> applied_;
  std::uint64_t max_counter_ = 0;
};

// Value-semantics convenience wrapper.
DocState apply(DocState state, const DocOp& op);

// Concatenated text of all live text runs in order.
std::string plain_text(const std::vector<MaterializedNode>& nodes);

}  // namespace ppad::doc

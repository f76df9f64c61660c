#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ppad::doc {

// Opaque replica token. Must be non-empty; the empty token is reserved for
// the document boundary sentinels.
using ReplicaId = std::string;

// Digits allocated to content live in [1, kDigitBase - 1]. Digit 0 only
// appears in the begin sentinel and in non-final "step left" components;
// the end sentinel uses kDigitBase itself.
inline constexpr std::uint32_t kDigitBase = 1u << 16;

struct PathElement {
  std::uint32_t digit = 0;
  ReplicaId replica;

  auto operator<=>(const PathElement&) const = default;
  bool operator==(const PathElement&) const = default;
};

// Dense, totally ordered identifier for one document node. Ordering is
// lexicographic over (digit, replica) pairs with a proper prefix sorting
// first.
class PositionId {
 public:
  PositionId() = default;
  explicit PositionId(std::vector<PathElement> path) : path_(std::move(path)) {}

  static const PositionId& begin();
  static const PositionId& end();

  std::span<const PathElement> path() const { return path_; }
  std::size_t depth() const { return path_.size(); }
  bool empty() const { return path_.empty(); }
  bool is_sentinel() const { return *this == begin() || *this == end(); }

  // Child identifier used for word runs: this path extended by one element.
  PositionId child(std::uint32_t digit, const ReplicaId& replica) const;

  // True for ids this library could have allocated: non-empty, final digit
  // in [1, kDigitBase - 1], every replica token non-empty except the copied
  // begin-sentinel element at depth 0.
  bool is_allocatable() const;

  // "digit:replica/digit:replica". Replica tokens are percent-escaped for
  // ':' '/' and '%'.
  std::string to_string() const;
  static PositionId parse(std::string_view s);

  friend auto operator<=>(const PositionId&, const PositionId&) = default;
  friend bool operator==(const PositionId&, const PositionId&) = default;

 private:
  std::vector<PathElement> path_;
};

// Returns p with left < p < right. Deterministic in (left, right, replica,
// counter); the counter only perturbs which free digit is picked.
PositionId allocate_between(const PositionId& left, const PositionId& right,
                            const ReplicaId& replica, std::uint64_t counter);

}  // namespace ppad::doc

#include "policypad/doc/position.hpp"

#include <algorithm>
#include <charconv>

#include "policypad/core/errors.hpp"
#include "policypad/core/text.hpp"

namespace ppad::doc {

namespace {

// Upper bound on how far past the lower neighbour a fresh digit may land.
// Small steps keep appends shallow; the counter-derived jitter spreads
// concurrent allocations.
constexpr std::uint32_t kBoundary = 32;

std::uint64_t mix(const ReplicaId& replica, std::uint64_t counter) {
  std::uint64_t h = text::fnv1a64(replica) ^ (counter * 0x9e3779b97f4a7c15ULL);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ':' || c == '/' || c == '%') {
      static constexpr char kHex[] = "0123456789ABCDEF";
      out += '%';
      out += kHex[(static_cast<unsigned char>(c) >> 4) & 0xF];
      out += kHex[static_cast<unsigned char>(c) & 0xF];
    } else {
      out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      unsigned v = 0;
      auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
      if (ec != std::errc() || p != s.data() + i + 3) {
        fail(ErrorCode::kInvalidArgument, "bad escape in position id");
      }
      out += static_cast<char>(v);
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

const PositionId& PositionId::begin() {
  static const PositionId kBegin({PathElement{0, ""}});
  return kBegin;
}

const PositionId& PositionId::end() {
  static const PositionId kEnd({PathElement{kDigitBase, ""}});
  return kEnd;
}

PositionId PositionId::child(std::uint32_t digit, const ReplicaId& replica) const {
  auto path = path_;
  path.push_back({digit, replica});
  return PositionId(std::move(path));
}

bool PositionId::is_allocatable() const {
  if (path_.empty()) return false;
  const auto& last = path_.back();
  if (last.digit == 0 || last.digit >= kDigitBase || last.replica.empty()) return false;
  for (std::size_t i = 0; i < path_.size(); ++i) {
    if (path_[i].digit > kDigitBase - 1) return false;
    if (path_[i].replica.empty() && !(i == 0 && path_[i].digit == 0)) return false;
  }
  return true;
}

std::string PositionId::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < path_.size(); ++i) {
    if (i) out += '/';
    out += std::to_string(path_[i].digit);
    out += ':';
    out += escape(path_[i].replica);
  }
  return out;
}

PositionId PositionId::parse(std::string_view s) {
  std::vector<PathElement> path;
  if (s.empty()) fail(ErrorCode::kInvalidArgument, "empty position id");
  std::size_t start = 0;
  while (start <= s.size()) {
    auto slash = s.find('/', start);
    auto part = s.substr(start, slash == std::string_view::npos ? s.npos : slash - start);
    auto colon = part.find(':');
    if (colon == std::string_view::npos) {
      fail(ErrorCode::kInvalidArgument, "position element missing ':'");
    }
    std::uint32_t digit = 0;
    auto [p, ec] = std::from_chars(part.data(), part.data() + colon, digit);
    if (ec != std::errc() || p != part.data() + colon || digit > kDigitBase) {
      fail(ErrorCode::kInvalidArgument, "bad digit in position id");
    }
    path.push_back({digit, unescape(part.substr(colon + 1))});
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return PositionId(std::move(path));
}

PositionId allocate_between(const PositionId& left, const PositionId& right,
                            const ReplicaId& replica, std::uint64_t counter) {
  if (!(left < right)) {
    fail(ErrorCode::kPrecondition, "allocate_between requires left < right");
  }
  if (replica.empty()) fail(ErrorCode::kInvalidArgument, "empty replica id");

  const auto p = left.path();
  const auto q = right.path();
  std::vector<PathElement> out;
  // tight_lo: out equals p's prefix so far; tight_hi: out equals q's prefix.
  bool tight_lo = true;
  bool tight_hi = true;

  for (std::size_t i = 0;; ++i) {
    const bool p_has = tight_lo && i < p.size();
    const std::int64_t lo = p_has ? static_cast<std::int64_t>(p[i].digit) : -1;
    // While tight against q, q is strictly longer than out (else out >= q).
    const std::int64_t hi = tight_hi ? static_cast<std::int64_t>(q[i].digit)
                                     : static_cast<std::int64_t>(kDigitBase);

    const std::int64_t first = std::max<std::int64_t>(lo + 1, 1);
    const std::int64_t last = std::min<std::int64_t>(hi - 1, kDigitBase - 1);
    if (first <= last) {
      const auto width = static_cast<std::uint64_t>(last - first + 1);
      const auto step = mix(replica, counter) % std::min<std::uint64_t>(width, kBoundary);
      out.push_back({static_cast<std::uint32_t>(first + static_cast<std::int64_t>(step)), replica});
      return PositionId(std::move(out));
    }

    if (p_has) {
      // No room at this depth: follow the left neighbour down.
      out.push_back(p[i]);
      tight_hi = tight_hi && p[i] == q[i];
    } else if (hi >= 1) {
      // No lower bound here and q's digit is 1: step left of it.
      out.push_back({0, replica});
      tight_hi = false;
    } else {
      // q[i] is a digit-0 step element, which is never final; follow it.
      out.push_back(q[i]);
    }
    if (!p_has) tight_lo = false;
  }
}

}  // namespace ppad::doc

#include "policypad/collab/persistence.hpp"

#include <sstream>

#include "policypad/core/errors.hpp"

namespace ppad::collab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kLogName = "events.log";
constexpr const char* kSnapshotName = "snapshot.json";
constexpr const char* kMetaName = "session.json";

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

json to_json(const LogRecord& r) {
  return {{"lsn", r.lsn}, {"seq", r.seq}, {"type", r.type}, {"data", r.data}};
}

LogRecord log_record_from_json(const json& j) {
  return {j.at("lsn").get<std::uint64_t>(), j.at("seq").get<std::uint64_t>(), j.at("type").get<std::string>(),
          j.at("data")};
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kPrecondition, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) fail(ErrorCode::kPrecondition, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

EventLog::EventLog(fs::path dir, std::size_t compact_every, std::uint64_t next_lsn)
    : dir_(std::move(dir)), compact_every_(compact_every == 0 ? 1 : compact_every), next_lsn_(next_lsn) {
  fs::create_directories(dir_ / "versions");
  open_log(std::ios::app);
}

void EventLog::open_log(std::ios::openmode mode) {
  if (log_.is_open()) log_.close();
  log_.open(dir_ / kLogName, std::ios::binary | std::ios::out | mode);
  if (!log_) fail(ErrorCode::kPrecondition, "cannot open event log in '" + dir_.string() + "'");
}

bool EventLog::append(std::string type, std::uint64_t seq, json data) {
  LogRecord r{next_lsn_++, seq, std::move(type), std::move(data)};
  log_ << to_json(r).dump() << '\n';
  log_.flush();
  if (!log_) fail(ErrorCode::kPrecondition, "event log write failed");
  ++since_snapshot_;
  return since_snapshot_ >= compact_every_;
}

void EventLog::write_snapshot(const json& state) {
  json snap = {{"lsn", last_lsn()}, {"state", state}};
  write_file_atomic(dir_ / kSnapshotName, snap.dump());
  // Records up to last_lsn() are now covered; a crash between the rename
  // and the truncation is harmless because replay skips covered lsns.
  open_log(std::ios::trunc);
  since_snapshot_ = 0;
}

void EventLog::write_meta(const json& meta) { write_file_atomic(dir_ / kMetaName, meta.dump(2)); }

void EventLog::write_version(int id, const json& version) {
  write_file_atomic(dir_ / "versions" / (std::to_string(id) + ".json"), version.dump(2));
}

Recovered read_data_dir(const fs::path& dir) {
  Recovered out;
  const auto meta_path = dir / kMetaName;
  if (!fs::exists(meta_path)) fail(ErrorCode::kCorruptLog, "no session.json in '" + dir.string() + "'");
  out.meta = json::parse(read_all(meta_path), nullptr, false);
  if (out.meta.is_discarded() || !out.meta.is_object()) fail(ErrorCode::kCorruptLog, "session.json is malformed");

  const auto snap_path = dir / kSnapshotName;
  if (fs::exists(snap_path)) {
    auto snap = json::parse(read_all(snap_path), nullptr, false);
    if (snap.is_discarded() || !snap.contains("state") || !snap.contains("lsn")) {
      fail(ErrorCode::kCorruptLog, "snapshot.json is malformed");
    }
    out.snapshot_lsn = snap["lsn"].get<std::uint64_t>();
    out.snapshot_state = std::move(snap["state"]);
  }

  const auto log_path = dir / kLogName;
  if (!fs::exists(log_path)) return out;
  std::istringstream in(read_all(log_path));
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> bad_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (bad_line) {
      fail(ErrorCode::kCorruptLog, "events.log line " + std::to_string(*bad_line) + " is unreadable");
    }
    auto j = json::parse(line, nullptr, false);
    LogRecord rec;
    bool ok = !j.is_discarded() && j.is_object();
    if (ok) {
      try {
        rec = log_record_from_json(j);
      } catch (const json::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      bad_line = line_no;
      continue;
    }
    if (rec.lsn <= out.snapshot_lsn) continue;
    if (!out.tail.empty() && rec.lsn != out.tail.back().lsn + 1) {
      fail(ErrorCode::kCorruptLog, "events.log has a gap before lsn " + std::to_string(rec.lsn));
    }
    out.tail.push_back(std::move(rec));
  }
  out.dropped_partial_tail = bad_line.has_value();
  return out;
}

}  // namespace ppad::collab

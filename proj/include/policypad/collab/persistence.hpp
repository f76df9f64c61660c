#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ppad::collab {

inline constexpr std::size_t kDefaultCompactionThreshold = 5000;

// One state change as written to events.log (one JSON object per line).
struct LogRecord {
  std::uint64_t lsn = 0;
  std::uint64_t seq = 0;  // session seq after the change
  std::string type;
  nlohmann::json data;
};

nlohmann::json to_json(const LogRecord& r);
LogRecord log_record_from_json(const nlohmann::json& j);

// Layout under the data directory:
//   session.json    {"sessionId": ...}
//   events.log      records since the last snapshot
//   snapshot.json   {"lsn": n, "state": {...}}, replaced atomically
//   versions/N.json one export file per policy version
class EventLog {
 public:
  EventLog(std::filesystem::path dir, std::size_t compact_every = kDefaultCompactionThreshold,
           std::uint64_t next_lsn = 1);

  // Appends and flushes one record. Returns true when enough records have
  // accumulated since the last snapshot that the caller should compact.
  bool append(std::string type, std::uint64_t seq, nlohmann::json data);

  // Writes snapshot.json (via a temp file and rename) covering every record
  // appended so far, then starts a fresh events.log.
  void write_snapshot(const nlohmann::json& state);

  void write_meta(const nlohmann::json& meta);
  void write_version(int id, const nlohmann::json& version);

  const std::filesystem::path& dir() const { return dir_; }
  std::uint64_t last_lsn() const { return next_lsn_ - 1; }
  std::size_t records_since_snapshot() const { return since_snapshot_; }

 private:
  void open_log(std::ios::openmode mode);

  std::filesystem::path dir_;
  std::size_t compact_every_;
  std::uint64_t next_lsn_;
  std::size_t since_snapshot_ = 0;
  std::ofstream log_;
};

struct Recovered {
  nlohmann::json meta;
  std::optional<nlohmann::json> snapshot_state;
  std::uint64_t snapshot_lsn = 0;
  std::vector<LogRecord> tail;  // records after the snapshot, in order
  bool dropped_partial_tail = false;
};

// Reads a data directory. A final line that does not parse (a write cut
// short) is dropped; a bad line followed by good ones throws
// Error(kCorruptLog), as does a missing or malformed session.json.
Recovered read_data_dir(const std::filesystem::path& dir);

// Write `content` to `path` through a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ppad::collab

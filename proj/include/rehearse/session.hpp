#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "rehearse/eval.hpp"
#include "rehearse/perf.hpp"

namespace rehearse::analytics {

enum class SessionKind { pre_test, practice, post_test, passive };
enum class GloveCondition { none, functional, sham };

struct SessionRecord {
  std::uint64_t id = 0;  // assigned by the store
  std::string participant_id;
  int day = 1;
  SessionKind kind = SessionKind::practice;
  std::string song_ref;
  std::optional<perf::Performance> performance;
  std::optional<eval::EvalReport> eval;
  std::int64_t started_at_ms = 0;  // unix epoch
  std::int64_t ended_at_ms = 0;
  GloveCondition glove_condition = GloveCondition::none;
  bool complete = true;  // passive sessions: logged duration met the target

  std::int64_t duration_ms() const { return ended_at_ms - started_at_ms; }
  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

struct StoreConfig {
  double passive_minutes = 150.0;
  double passive_tolerance_minutes = 5.0;
};

/// Append-only session log. Each record is one JSON line; the in-memory
/// index is rebuilt from the file on open. One writer at a time, readers see
/// a consistent snapshot.
class SessionStore {
 public:
  /// In-memory store, nothing persisted.
  explicit SessionStore(StoreConfig config = {});
  /// Opens (creating if needed) the log at `log_path` and replays it.
  explicit SessionStore(const std::filesystem::path& log_path, StoreConfig config = {});

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  /// Validates and appends. Returns the new id.
  std::uint64_t record(SessionRecord record);

  std::optional<SessionRecord> get(std::uint64_t id) const;
  std::optional<SessionRecord> find(const std::string& participant, int day, SessionKind kind,
                                    const std::string& song_ref) const;
  std::vector<SessionRecord> for_participant(const std::string& participant) const;
  std::vector<SessionRecord> all() const;
  std::vector<std::string> participants() const;
  std::size_t size() const;

  /// The exact JSON line written for record `id`.
  std::optional<std::string> raw_line(std::uint64_t id) const;

  const StoreConfig& config() const { return config_; }

 private:
  using Key = std::tuple<std::string, int, SessionKind, std::string>;

  void check(SessionRecord& record) const;
  void insert_locked(SessionRecord record, std::string line);

  StoreConfig config_;
  mutable std::shared_mutex mutex_;
  std::vector<SessionRecord> records_;
  std::vector<std::string> lines_;
  std::map<Key, std::size_t> index_;
  std::map<std::uint64_t, std::size_t> by_id_;
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
  std::uint64_t next_id_ = 1;
};

std::string_view to_string(SessionKind kind);
std::string_view to_string(GloveCondition condition);
SessionKind parse_session_kind(std::string_view text);
GloveCondition parse_glove_condition(std::string_view text);

}  // namespace rehearse::analytics

#include "rehearse/session.hpp"

#include <cmath>
#include <mutex>
#include <set>

#include "rehearse/error.hpp"
#include "rehearse/json_io.hpp"

namespace rehearse::analytics {

std::string_view to_string(SessionKind kind) {
  switch (kind) {
    case SessionKind::pre_test: return "pre_test";
    case SessionKind::practice: return "practice";
    case SessionKind::post_test: return "post_test";
    case SessionKind::passive: return "passive";
  }
  return "practice";
}

std::string_view to_string(GloveCondition condition) {
  switch (condition) {
    case GloveCondition::none: return "none";
    case GloveCondition::functional: return "functional";
    case GloveCondition::sham: return "sham";
  }
  return "none";
}

SessionKind parse_session_kind(std::string_view text) {
  if (text == "pre_test") return SessionKind::pre_test;
  if (text == "practice") return SessionKind::practice;
  if (text == "post_test") return SessionKind::post_test;
  if (text == "passive") return SessionKind::passive;
  throw Error(ErrorCode::BadRequest, "unknown session kind '" + std::string(text) + "'");
}

GloveCondition parse_glove_condition(std::string_view text) {
  if (text == "none") return GloveCondition::none;
  if (text == "functional") return GloveCondition::functional;
  if (text == "sham") return GloveCondition::sham;
  throw Error(ErrorCode::BadRequest, "unknown glove condition '" + std::string(text) + "'");
}

SessionStore::SessionStore(StoreConfig config) : config_(config) {}

SessionStore::SessionStore(const std::filesystem::path& log_path, StoreConfig config)
    : config_(config), path_(log_path) {
  if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
  if (std::filesystem::exists(log_path)) {
    std::ifstream in(log_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      SessionRecord rec;
      try {
        rec = nlohmann::json::parse(line).get<SessionRecord>();
      } catch (const std::exception& e) {
        // A torn final line from an interrupted append is dropped; anything
        // earlier means the log is damaged.
        if (in.peek() == std::char_traits<char>::eof()) break;
        throw Error(ErrorCode::StoreCorrupt, "line " + std::to_string(lineno) + ": " + e.what());
      }
      insert_locked(std::move(rec), line);
    }
  }
  out_.open(log_path, std::ios::app | std::ios::binary);
  if (!out_) throw Error(ErrorCode::Io, "cannot open " + log_path.string());
}

void SessionStore::check(SessionRecord& r) const {
  if (r.participant_id.empty()) throw Error(ErrorCode::InvalidRecord, "participant id is empty");
  if (r.day < 1) throw Error(ErrorCode::InvalidRecord, "day must be >= 1");
  if (r.ended_at_ms < r.started_at_ms) throw Error(ErrorCode::InvalidRecord, "session ends before it starts");
  const bool is_test = r.kind == SessionKind::pre_test || r.kind == SessionKind::post_test;
  if (is_test && (!r.performance || !r.eval)) {
    throw Error(ErrorCode::MissingEval, "test sessions need a performance and its evaluation");
  }
  if (r.kind == SessionKind::passive) {
    if (r.glove_condition == GloveCondition::none) {
      throw Error(ErrorCode::InvalidRecord, "passive sessions need a glove condition");
    }
    const double minutes = static_cast<double>(r.duration_ms()) / 60000.0;
    r.complete = std::abs(minutes - config_.passive_minutes) <= config_.passive_tolerance_minutes;
  } else {
    r.complete = true;
  }
}

void SessionStore::insert_locked(SessionRecord rec, std::string line) {
  Key key{rec.participant_id, rec.day, rec.kind, rec.song_ref};
  if (index_.contains(key)) throw Error(ErrorCode::DuplicateSession, "duplicate session in log");
  const std::size_t pos = records_.size();
  index_.emplace(std::move(key), pos);
  by_id_.emplace(rec.id, pos);
  next_id_ = std::max(next_id_, rec.id + 1);
  records_.push_back(std::move(rec));
  lines_.push_back(std::move(line));
}

std::uint64_t SessionStore::record(SessionRecord rec) {
  check(rec);
  std::unique_lock lock(mutex_);
  if (index_.contains(Key{rec.participant_id, rec.day, rec.kind, rec.song_ref})) {
    throw Error(ErrorCode::DuplicateSession, rec.participant_id + " day " + std::to_string(rec.day) + " " +
                                                 std::string(to_string(rec.kind)) + " already recorded");
  }
  rec.id = next_id_;
  std::string line = nlohmann::json(rec).dump();
  if (path_) {
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorCode::Io, "append to session log failed");
  }
  const auto id = rec.id;
  insert_locked(std::move(rec), std::move(line));
  return id;
}

std::optional<SessionRecord> SessionStore::get(std::uint64_t id) const {
  std::shared_lock lock(mutex_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return records_[it->second];
}

std::optional<std::string> SessionStore::raw_line(std::uint64_t id) const {
  std::shared_lock lock(mutex_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return lines_[it->second];
}

std::optional<SessionRecord> SessionStore::find(const std::string& participant, int day, SessionKind kind,
                                                const std::string& song_ref) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(Key{participant, day, kind, song_ref});
  if (it == index_.end()) return std::nullopt;
  return records_[it->second];
}

std::vector<SessionRecord> SessionStore::for_participant(const std::string& participant) const {
  std::shared_lock lock(mutex_);
  std::vector<SessionRecord> out;
  for (const auto& r : records_) {
    if (r.participant_id == participant) out.push_back(r);
  }
  return out;
}

std::vector<SessionRecord> SessionStore::all() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::vector<std::string> SessionStore::participants() const {
  std::shared_lock lock(mutex_);
  std::set<std::string> ids;
  for (const auto& r : records_) ids.insert(r.participant_id);
  return {ids.begin(), ids.end()};
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

}  // namespace rehearse::analytics

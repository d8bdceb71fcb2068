#include "rehearse/service.hpp"

#include <fstream>
#include <sstream>

#include "rehearse/error.hpp"
#include "rehearse/json_io.hpp"

namespace rehearse::api {

namespace fs = std::filesystem;
using json = nlohmann::json;
using analytics::GloveCondition;
using analytics::SessionKind;

struct Service::Device {
  explicit Device(const glove::LinkConfig& link, std::int64_t wall) : pair(link), last_wall_ms(wall) {}

  std::mutex mutex;
  std::optional<GloveAssignment> assignment;
  glove::GlovePair pair;
  std::int64_t last_wall_ms;
  std::optional<haptic::StimulusSchedule> schedule;
};

namespace {

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StoreCorrupt, path.string() + ": " + e.what());
  }
}

void validate_song(const midi::SongScore& song) {
  if (song.events.empty()) throw Error(ErrorCode::BadRequest, "song has no notes");
  for (const auto& ev : song.events) {
    if (ev.pitch < 0 || ev.pitch > 127 || ev.onset_ms < 0 || ev.duration_ms <= 0 || ev.velocity < 1 ||
        ev.velocity > 127 || (ev.finger && (*ev.finger < 1 || *ev.finger > 5))) {
      throw Error(ErrorCode::BadRequest, "note field out of range");
    }
  }
}

GloveCondition to_condition(const std::optional<GloveAssignment>& a) {
  return a ? a->condition : GloveCondition::none;
}

}  // namespace

void require_participant(const Principal& who, const std::string& participant) {
  if (participant.empty()) throw Error(ErrorCode::BadRequest, "participant id is empty");
  if (!who.is_analyst() && who.subject != participant) {
    throw Error(ErrorCode::Forbidden, "participants may only act for themselves");
  }
}

void require_analyst(const Principal& who) {
  if (!who.is_analyst()) throw Error(ErrorCode::Forbidden, "analyst role required");
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  config_.eval.validate();
  if (!config_.wall_ms) {
    config_.wall_ms = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (!config_.data_dir) {
    store_ = std::make_unique<analytics::SessionStore>(config_.store);
    return;
  }
  const auto& dir = *config_.data_dir;
  fs::create_directories(dir / "songs");
  fs::create_directories(dir / "study");
  store_ = std::make_unique<analytics::SessionStore>(dir / "sessions.jsonl", config_.store);

  for (const auto& entry : fs::directory_iterator(dir / "songs")) {
    if (entry.path().extension() != ".json") continue;
    auto song = read_json(entry.path()).get<midi::SongScore>();
    songs_.emplace(song.id, std::move(song));
  }
  for (const auto& entry : fs::directory_iterator(dir / "study")) {
    if (entry.path().extension() != ".json") continue;
    const auto j = read_json(entry.path());
    teams_[j.at("team").at("team_id").get<std::string>()] =
        j.at("assignments").get<std::vector<study::ConditionAssignment>>();
  }
  if (fs::exists(dir / "gloves.json")) {
    const auto registry = read_json(dir / "gloves.json");
    for (const auto& [id, a] : registry.items()) {
      auto d = std::make_shared<Device>(config_.link, now_ms());
      d->assignment = GloveAssignment{a.at("participant_id").get<std::string>(),
                                      analytics::parse_glove_condition(a.at("condition").get<std::string>())};
      gloves_.emplace(id, std::move(d));
    }
  }
}

Service::~Service() = default;

std::int64_t Service::now_ms() const { return config_.wall_ms(); }

// ---- songs ----

midi::SongScore Service::add_song(const Principal& who, midi::SongScore song) {
  require_analyst(who);
  validate_song(song);
  std::sort(song.events.begin(), song.events.end(),
            [](const auto& a, const auto& b) { return std::tie(a.onset_ms, a.pitch) < std::tie(b.onset_ms, b.pitch); });
  if (song.id.empty()) song.id = midi::content_id(midi::write_smf(song));
  std::unique_lock lock(songs_mutex_);
  if (config_.data_dir) write_file(*config_.data_dir / "songs" / (song.id + ".json"), json(song).dump());
  songs_[song.id] = song;
  return song;
}

midi::SongScore Service::add_song_smf(const Principal& who, std::span<const std::uint8_t> bytes, std::string title) {
  require_analyst(who);
  auto parsed = midi::parse_smf(bytes);
  if (!title.empty()) parsed.song.title = std::move(title);
  return add_song(who, std::move(parsed.song));
}

midi::SongScore Service::get_song(const Principal&, const std::string& id) const {
  std::shared_lock lock(songs_mutex_);
  const auto it = songs_.find(id);
  if (it == songs_.end()) throw Error(ErrorCode::UnknownSong, id);
  return it->second;
}

std::vector<midi::SongScore> Service::list_songs(const Principal&) const {
  std::shared_lock lock(songs_mutex_);
  std::vector<midi::SongScore> out;
  for (const auto& [id, song] : songs_) out.push_back(song);
  return out;
}

// ---- active sessions ----

PerformanceResult Service::score_and_store(const std::string& participant, const PerformanceRequest& request,
                                           std::span<const midi::NoteEvent> notes, std::int64_t orphans,
                                           std::int64_t unterminated) {
  if (request.kind == SessionKind::passive) throw Error(ErrorCode::BadRequest, "performances are active sessions");
  const auto song = get_song({}, request.song_id);
  auto report = eval::score_events(song.events, notes, config_.eval);

  analytics::SessionRecord rec;
  rec.participant_id = participant;
  rec.day = request.day;
  rec.kind = request.kind;
  rec.song_ref = song.id;
  rec.performance = perf::Performance{perf::extract_chords(notes, config_.eval.chord_window_ms),
                                      perf::Source::live, std::nullopt};
  rec.eval = report;
  const auto now = now_ms();
  rec.started_at_ms = request.started_at_ms.value_or(now);
  rec.ended_at_ms = request.ended_at_ms.value_or(std::max(now, rec.started_at_ms));

  PerformanceResult out;
  out.session_id = store_->record(std::move(rec));
  out.report = std::move(report);
  out.orphan_note_offs = orphans;
  out.unterminated_notes = unterminated;
  return out;
}

PerformanceResult Service::submit_performance(const Principal& who, const std::string& participant,
                                              const PerformanceRequest& request) {
  require_participant(who, participant);
  if (request.notes) return score_and_store(participant, request, *request.notes, 0, 0);
  const auto captured = midi::capture_events(request.messages);
  return score_and_store(participant, request, captured.events, captured.orphan_note_offs,
                         captured.unterminated_notes);
}

void Service::live_start(const Principal& who, const std::string& participant, SessionKind kind,
                         const std::string& song_id, int day) {
  require_participant(who, participant);
  if (kind == SessionKind::passive) throw Error(ErrorCode::BadRequest, "use the passive endpoints");
  get_song(who, song_id);
  std::lock_guard lock(live_mutex_);
  auto& live = live_[participant];
  if (live.state != LiveState::idle) throw Error(ErrorCode::SessionAlreadyActive, participant);
  live = Live{};
  live.state = kind == SessionKind::practice ? LiveState::practicing : LiveState::testing;
  live.kind = kind;
  live.song_id = song_id;
  live.day = day;
  live.started_at_ms = now_ms();
}

std::size_t Service::live_append(const Principal& who, const std::string& participant,
                                 const std::vector<midi::TimedMessage>& messages) {
  require_participant(who, participant);
  std::lock_guard lock(live_mutex_);
  auto it = live_.find(participant);
  if (it == live_.end() || (it->second.state != LiveState::testing && it->second.state != LiveState::practicing)) {
    throw Error(ErrorCode::NoActiveSession, participant);
  }
  auto& buf = it->second.buffer;
  if (!buf.empty() && !messages.empty() && messages.front().time_ms < buf.back().time_ms) {
    throw Error(ErrorCode::NonMonotoneTimestamps, "batch starts before the previous one ended");
  }
  buf.insert(buf.end(), messages.begin(), messages.end());
  return buf.size();
}

std::optional<PerformanceResult> Service::live_stop(const Principal& who, const std::string& participant) {
  require_participant(who, participant);
  Live live;
  {
    std::lock_guard lock(live_mutex_);
    auto it = live_.find(participant);
    if (it == live_.end() || (it->second.state != LiveState::testing && it->second.state != LiveState::practicing)) {
      throw Error(ErrorCode::NoActiveSession, participant);
    }
    live = std::move(it->second);
    it->second = Live{};
  }
  if (live.buffer.empty()) return std::nullopt;
  PerformanceRequest req;
  req.song_id = live.song_id;
  req.kind = live.kind;
  req.day = live.day;
  req.messages = std::move(live.buffer);
  req.started_at_ms = live.started_at_ms;
  return submit_performance(who, participant, req);
}

void Service::live_cancel(const Principal& who, const std::string& participant) {
  require_participant(who, participant);
  std::lock_guard lock(live_mutex_);
  auto it = live_.find(participant);
  if (it == live_.end() || it->second.state == LiveState::idle) throw Error(ErrorCode::NoActiveSession, participant);
  if (it->second.state == LiveState::passive_logging) {
    throw Error(ErrorCode::BadRequest, "stop the passive session instead");
  }
  it->second = Live{};
}

LiveState Service::live_state(const Principal& who, const std::string& participant) const {
  require_participant(who, participant);
  std::lock_guard lock(live_mutex_);
  const auto it = live_.find(participant);
  return it == live_.end() ? LiveState::idle : it->second.state;
}

// ---- gloves ----

std::string Service::glove_of(const std::string& participant) const {
  std::shared_lock lock(gloves_mutex_);
  for (const auto& [id, d] : gloves_) {
    std::lock_guard dl(d->mutex);
    if (d->assignment && d->assignment->participant_id == participant) return id;
  }
  throw Error(ErrorCode::NoDevice, "no glove pair assigned to " + participant);
}

std::shared_ptr<Service::Device> Service::device(const Principal& who, const std::string& glove_id) const {
  std::shared_ptr<Device> d;
  {
    std::shared_lock lock(gloves_mutex_);
    const auto it = gloves_.find(glove_id);
    if (it == gloves_.end()) throw Error(ErrorCode::NoDevice, glove_id);
    d = it->second;
  }
  if (!who.is_analyst()) {
    std::lock_guard dl(d->mutex);
    if (!d->assignment || d->assignment->participant_id != who.subject) {
      throw Error(ErrorCode::Forbidden, "glove " + glove_id + " is not assigned to the caller");
    }
  }
  return d;
}

void Service::save_gloves() const {
  if (!config_.data_dir) return;
  json j = json::object();
  for (const auto& [id, d] : gloves_) {
    std::lock_guard dl(d->mutex);
    if (!d->assignment) continue;
    j[id] = {{"participant_id", d->assignment->participant_id},
             {"condition", analytics::to_string(d->assignment->condition)}};
  }
  write_file(*config_.data_dir / "gloves.json", j.dump(2));
}

void Service::assign_glove(const Principal& who, const std::string& glove_id, const GloveAssignment& a) {
  require_analyst(who);
  if (glove_id.empty() || a.participant_id.empty()) throw Error(ErrorCode::BadRequest, "glove and participant ids required");
  if (a.condition == GloveCondition::none) throw Error(ErrorCode::BadRequest, "glove condition must be functional or sham");
  std::unique_lock lock(gloves_mutex_);
  for (const auto& [id, d] : gloves_) {
    std::lock_guard dl(d->mutex);
    if (id != glove_id && d->assignment && d->assignment->participant_id == a.participant_id) {
      throw Error(ErrorCode::BadRequest, a.participant_id + " already holds glove " + id);
    }
  }
  auto& d = gloves_[glove_id];
  if (!d) d = std::make_shared<Device>(config_.link, now_ms());
  {
    std::lock_guard dl(d->mutex);
    d->assignment = a;
  }
  save_gloves();
}

void Service::catch_up(Device& d) const {
  const auto now = now_ms();
  if (config_.glove_speed > 0 && now > d.last_wall_ms) {
    const auto sim_us = static_cast<std::int64_t>(static_cast<double>(now - d.last_wall_ms) * 1000.0 * config_.glove_speed);
    d.pair.advance(std::chrono::microseconds(sim_us));
  }
  d.last_wall_ms = now;
}

DeviceStatus Service::snapshot(const std::string& id, Device& d) const {
  const auto st = d.pair.status();
  DeviceStatus out;
  out.glove_id = id;
  out.battery_pct = d.pair.master().battery_pct();
  out.playback = st.playback;
  out.position_ms = d.pair.master().position_us / 1000;
  out.schedule_loaded = d.schedule.has_value();
  out.completed = d.pair.master().completed;
  if (d.schedule) {
    out.song_ref = d.schedule->song_ref;
    out.playback_ms = d.schedule->playback_ms();
  }
  return out;
}

DeviceStatus Service::glove_command(const Principal& who, const std::string& glove_id, const GloveCommand& cmd) {
  std::optional<midi::SongScore> song;
  if (cmd.kind == GloveCommandKind::upload_schedule) song = get_song(who, cmd.song_id);

  const auto d = device(who, glove_id);
  std::lock_guard dl(d->mutex);
  catch_up(*d);
  auto check = [](const glove::HostReply& r) {
    if (r.error) throw Error(*r.error, "glove rejected the command");
  };
  switch (cmd.kind) {
    case GloveCommandKind::upload_schedule: {
      if (d->pair.master().playback == glove::Playback::playing) throw Error(ErrorCode::DeviceBusy, glove_id);
      const bool sham = to_condition(d->assignment) == GloveCondition::sham;
      auto sched = haptic::compile_schedule(haptic::assign_fingers(*song), cmd.minutes, config_.compile, sham);
      check(d->pair.upload(sched));
      // let the slave copy settle before anyone presses start
      d->pair.advance(std::chrono::milliseconds(500));
      d->schedule = std::move(sched);
      break;
    }
    case GloveCommandKind::start:
      check(d->pair.start());
      break;
    case GloveCommandKind::stop:
      check(d->pair.stop());
      break;
    case GloveCommandKind::status:
      break;
    case GloveCommandKind::advance:
      if (cmd.advance_ms < 0) throw Error(ErrorCode::BadRequest, "advance must be non-negative");
      d->pair.advance(std::chrono::milliseconds(cmd.advance_ms));
      break;
    case GloveCommandKind::charge:
      if (d->pair.master().playback == glove::Playback::playing || d->pair.slave().playback == glove::Playback::playing) {
        throw Error(ErrorCode::DeviceBusy, glove_id);
      }
      d->pair.mutable_master().battery_units = glove::kBatteryCapacity;
      d->pair.mutable_slave().battery_units = glove::kBatteryCapacity;
      break;
  }
  return snapshot(glove_id, *d);
}

std::vector<glove::Activation> Service::glove_trace(const Principal& who, const std::string& glove_id) const {
  require_analyst(who);
  const auto d = device(who, glove_id);
  std::lock_guard dl(d->mutex);
  auto out = glove::activations(d->pair.trace(), haptic::Hand::right);
  const auto left = glove::activations(d->pair.trace(), haptic::Hand::left);
  out.insert(out.end(), left.begin(), left.end());
  return out;
}

// ---- passive sessions ----

DeviceStatus Service::passive_start(const Principal& who, const std::string& participant, const std::string& song_id,
                                    int day) {
  require_participant(who, participant);
  const auto glove_id = glove_of(participant);
  std::lock_guard lock(live_mutex_);
  auto& live = live_[participant];
  if (live.state != LiveState::idle) throw Error(ErrorCode::SessionAlreadyActive, participant);

  const auto d = device(who, glove_id);
  std::lock_guard dl(d->mutex);
  catch_up(*d);
  if (!d->schedule) throw Error(ErrorCode::StartWithoutSchedule, "upload a schedule to " + glove_id + " first");
  if (!song_id.empty() && song_id != d->schedule->song_ref) {
    throw Error(ErrorCode::BadRequest, "glove holds a different song");
  }
  if (d->pair.master().playback == glove::Playback::playing) throw Error(ErrorCode::DeviceBusy, glove_id);
  const auto reply = d->pair.start();
  if (reply.error) throw Error(*reply.error, "glove refused to start");
  if (reply.status && reply.status->code == glove::StatusCode::battery_empty) {
    throw Error(ErrorCode::DeviceBusy, "glove battery is empty");
  }
  live = Live{};
  live.state = LiveState::passive_logging;
  live.kind = SessionKind::passive;
  live.song_id = d->schedule->song_ref;
  live.day = day;
  live.started_at_ms = now_ms();
  live.glove_id = glove_id;
  return snapshot(glove_id, *d);
}

PassiveResult Service::passive_stop(const Principal& who, const std::string& participant) {
  require_participant(who, participant);
  Live live;
  {
    std::lock_guard lock(live_mutex_);
    auto it = live_.find(participant);
    if (it == live_.end() || it->second.state != LiveState::passive_logging) {
      throw Error(ErrorCode::NoActiveSession, participant);
    }
    live = std::move(it->second);
    it->second = Live{};
  }
  std::int64_t duration_ms = 0;
  GloveCondition condition = GloveCondition::none;
  {
    const auto d = device(Principal{Role::analyst, "service"}, live.glove_id);
    std::lock_guard dl(d->mutex);
    catch_up(*d);
    if (d->pair.master().playback == glove::Playback::playing) d->pair.stop();
    duration_ms = d->pair.master().position_us / 1000;
    condition = to_condition(d->assignment);
  }
  analytics::SessionRecord rec;
  rec.participant_id = participant;
  rec.day = live.day;
  rec.kind = SessionKind::passive;
  rec.song_ref = live.song_id;
  rec.glove_condition = condition;
  rec.started_at_ms = live.started_at_ms;
  rec.ended_at_ms = live.started_at_ms + duration_ms;
  PassiveResult out;
  out.session_id = store_->record(std::move(rec));
  out.duration_ms = duration_ms;
  out.complete = store_->get(out.session_id)->complete;
  return out;
}

// ---- analytics ----

std::vector<analytics::ProgressPoint> Service::progress(const Principal& who, const std::string& participant) const {
  require_participant(who, participant);
  return analytics::progress_series(*store_, participant);
}

stats::PermutationResult Service::compare(const Principal& who, analytics::Metric metric, GloveCondition a,
                                          GloveCondition b, const stats::PermutationOptions& options) const {
  require_analyst(who);
  const auto groups = analytics::condition_groups(*store_, metric);
  auto pick = [&](GloveCondition c) {
    const auto it = groups.find(c);
    return it == groups.end() ? std::vector<double>{} : it->second;
  };
  const auto ga = pick(a), gb = pick(b);
  return stats::permutation_test(ga, gb, options);
}

// ---- study ----

std::vector<study::ConditionAssignment> Service::create_team(const Principal& who, const study::Team& team,
                                                             std::uint64_t seed) {
  require_analyst(who);
  auto rows = study::assign_latin_square(team, seed);
  std::unique_lock lock(study_mutex_);
  if (teams_.contains(team.id)) throw Error(ErrorCode::BadRequest, "team " + team.id + " already assigned");
  if (config_.data_dir) {
    json j{{"team", team}, {"seed", seed}, {"assignments", rows}};
    write_file(*config_.data_dir / "study" / (team.id + ".json"), j.dump(2));
  }
  teams_[team.id] = rows;
  return rows;
}

std::vector<study::ConditionAssignment> Service::assignments(const Principal& who) const {
  std::shared_lock lock(study_mutex_);
  std::vector<study::ConditionAssignment> all;
  for (const auto& [id, rows] : teams_) all.insert(all.end(), rows.begin(), rows.end());
  return study::unblind(all, who.is_analyst() ? study::Role::analyst : study::Role::participant);
}

std::vector<study::BlindedAssignment> Service::participant_assignment(const Principal& who,
                                                                      const std::string& participant) const {
  require_participant(who, participant);
  std::shared_lock lock(study_mutex_);
  std::vector<study::ConditionAssignment> mine;
  for (const auto& [id, rows] : teams_) {
    for (const auto& r : rows) {
      if (r.participant_id == participant) mine.push_back(r);
    }
  }
  return study::blind(mine);
}

// ---- text and json ----

std::string_view to_string(LiveState state) {
  switch (state) {
    case LiveState::idle: return "idle";
    case LiveState::testing: return "testing";
    case LiveState::practicing: return "practicing";
    case LiveState::passive_logging: return "passive_logging";
  }
  return "idle";
}

std::string_view to_string(glove::Playback playback) {
  switch (playback) {
    case glove::Playback::idle: return "idle";
    case glove::Playback::playing: return "playing";
    case glove::Playback::paused: return "paused";
  }
  return "idle";
}

GloveCommandKind parse_glove_command(std::string_view text) {
  if (text == "upload_schedule") return GloveCommandKind::upload_schedule;
  if (text == "start") return GloveCommandKind::start;
  if (text == "stop") return GloveCommandKind::stop;
  if (text == "status") return GloveCommandKind::status;
  if (text == "advance") return GloveCommandKind::advance;
  if (text == "charge") return GloveCommandKind::charge;
  throw Error(ErrorCode::BadRequest, "unknown glove command '" + std::string(text) + "'");
}

void to_json(json& j, const PerformanceResult& r) {
  j = json{{"session_id", r.session_id},
           {"report", r.report},
           {"orphan_note_offs", r.orphan_note_offs},
           {"unterminated_notes", r.unterminated_notes}};
}

void to_json(json& j, const DeviceStatus& s) {
  j = json{{"glove_id", s.glove_id},     {"battery_pct", s.battery_pct},   {"playback", to_string(s.playback)},
           {"position_ms", s.position_ms}, {"schedule_loaded", s.schedule_loaded}, {"completed", s.completed},
           {"song_ref", s.song_ref},     {"playback_ms", s.playback_ms}};
}

void to_json(json& j, const PassiveResult& r) {
  j = json{{"session_id", r.session_id}, {"duration_ms", r.duration_ms}, {"complete", r.complete}};
}

json progress_json(const std::vector<analytics::ProgressPoint>& points, bool with_condition) {
  json arr = json::array();
  for (const auto& p : points) {
    json j{{"participant_id", p.participant_id}, {"day", p.day},           {"song_ref", p.song_ref},
           {"pre_score", p.pre_score},           {"post_score", p.post_score}, {"active_delta", p.active_delta}};
    j["passive_delta"] = p.passive_delta ? json(*p.passive_delta) : json(nullptr);
    if (with_condition) j["glove_condition"] = analytics::to_string(p.condition);
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace rehearse::api

namespace rehearse::stats {

void to_json(nlohmann::json& j, const PermutationResult& r) {
  j = nlohmann::json{
      {"p_value", r.p_value}, {"observed_diff", r.observed_diff}, {"exact", r.exact}, {"relabelings", r.relabelings}};
}

}  // namespace rehearse::stats

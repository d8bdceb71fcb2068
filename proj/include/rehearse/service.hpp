#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "rehearse/auth.hpp"
#include "rehearse/eval.hpp"
#include "rehearse/glove_sim.hpp"
#include "rehearse/haptic.hpp"
#include "rehearse/midi.hpp"
#include "rehearse/progress.hpp"
#include "rehearse/session.hpp"
#include "rehearse/stats.hpp"
#include "rehearse/study.hpp"

namespace rehearse::api {

struct ServiceConfig {
  std::optional<std::filesystem::path> data_dir;  // nullopt keeps everything in memory
  eval::EvalConfig eval;
  haptic::CompileConfig compile;
  analytics::StoreConfig store;
  glove::LinkConfig link;
  /// Simulated glove seconds per wall-clock second. 0 leaves the glove clock
  /// to explicit `advance` commands.
  double glove_speed = 0.0;
  std::function<std::int64_t()> wall_ms;  // defaults to the system clock
};

enum class LiveState { idle, testing, practicing, passive_logging };

struct PerformanceRequest {
  std::string song_id;
  analytics::SessionKind kind = analytics::SessionKind::practice;
  int day = 1;
  std::vector<midi::TimedMessage> messages;    // raw keyboard stream
  std::optional<std::vector<midi::NoteEvent>> notes;  // or already paired notes
  std::optional<std::int64_t> started_at_ms;
  std::optional<std::int64_t> ended_at_ms;
};

struct PerformanceResult {
  std::uint64_t session_id = 0;
  eval::EvalReport report;
  std::int64_t orphan_note_offs = 0;
  std::int64_t unterminated_notes = 0;
};

enum class GloveCommandKind { upload_schedule, start, stop, status, advance, charge };

struct GloveCommand {
  GloveCommandKind kind = GloveCommandKind::status;
  std::string song_id;         // upload_schedule
  double minutes = 150.0;      // upload_schedule
  std::int64_t advance_ms = 0;  // advance
};

struct DeviceStatus {
  std::string glove_id;
  double battery_pct = 100.0;
  glove::Playback playback = glove::Playback::idle;
  std::int64_t position_ms = 0;
  bool schedule_loaded = false;
  bool completed = false;
  std::string song_ref;
  std::int64_t playback_ms = 0;  // length of the loaded schedule
};

struct PassiveResult {
  std::uint64_t session_id = 0;
  std::int64_t duration_ms = 0;
  bool complete = false;
};

struct GloveAssignment {
  std::string participant_id;
  analytics::GloveCondition condition = analytics::GloveCondition::functional;
};

/// Domain layer behind the HTTP routes and the CLI. Every call names the
/// caller; participants may only touch their own records and glove.
class Service {
 public:
  explicit Service(ServiceConfig config = {});
  ~Service();

  // songs
  midi::SongScore add_song(const Principal& who, midi::SongScore song);
  midi::SongScore add_song_smf(const Principal& who, std::span<const std::uint8_t> bytes, std::string title = {});
  midi::SongScore get_song(const Principal& who, const std::string& id) const;
  std::vector<midi::SongScore> list_songs(const Principal& who) const;

  // active sessions
  PerformanceResult submit_performance(const Principal& who, const std::string& participant,
                                       const PerformanceRequest& request);
  void live_start(const Principal& who, const std::string& participant, analytics::SessionKind kind,
                  const std::string& song_id, int day);
  std::size_t live_append(const Principal& who, const std::string& participant,
                          const std::vector<midi::TimedMessage>& messages);
  /// Scores and stores the capture. nullopt when nothing was played; the
  /// empty session is discarded.
  std::optional<PerformanceResult> live_stop(const Principal& who, const std::string& participant);
  void live_cancel(const Principal& who, const std::string& participant);
  LiveState live_state(const Principal& who, const std::string& participant) const;

  // passive sessions on the participant's glove pair
  DeviceStatus passive_start(const Principal& who, const std::string& participant, const std::string& song_id,
                             int day);
  PassiveResult passive_stop(const Principal& who, const std::string& participant);

  // gloves
  void assign_glove(const Principal& who, const std::string& glove_id, const GloveAssignment& assignment);
  DeviceStatus glove_command(const Principal& who, const std::string& glove_id, const GloveCommand& command);
  std::vector<glove::Activation> glove_trace(const Principal& who, const std::string& glove_id) const;

  // analytics
  std::vector<analytics::ProgressPoint> progress(const Principal& who, const std::string& participant) const;
  stats::PermutationResult compare(const Principal& who, analytics::Metric metric,
                                   analytics::GloveCondition a, analytics::GloveCondition b,
                                   const stats::PermutationOptions& options = {}) const;

  // study
  std::vector<study::ConditionAssignment> create_team(const Principal& who, const study::Team& team,
                                                      std::uint64_t seed);
  std::vector<study::ConditionAssignment> assignments(const Principal& who) const;
  std::vector<study::BlindedAssignment> participant_assignment(const Principal& who,
                                                               const std::string& participant) const;

  const analytics::SessionStore& store() const { return *store_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Device;
  struct Live {
    LiveState state = LiveState::idle;
    analytics::SessionKind kind = analytics::SessionKind::practice;
    std::string song_id;
    int day = 1;
    std::vector<midi::TimedMessage> buffer;
    std::int64_t started_at_ms = 0;
    std::string glove_id;
  };

  std::int64_t now_ms() const;
  std::shared_ptr<Device> device(const Principal& who, const std::string& glove_id) const;
  std::string glove_of(const std::string& participant) const;
  void catch_up(Device& d) const;
  DeviceStatus snapshot(const std::string& id, Device& d) const;
  void save_gloves() const;
  PerformanceResult score_and_store(const std::string& participant, const PerformanceRequest& request,
                                    std::span<const midi::NoteEvent> notes, std::int64_t orphans,
                                    std::int64_t unterminated);

  ServiceConfig config_;
  std::unique_ptr<analytics::SessionStore> store_;

  mutable std::shared_mutex songs_mutex_;
  std::map<std::string, midi::SongScore> songs_;

  mutable std::mutex live_mutex_;
  std::map<std::string, Live> live_;

  mutable std::shared_mutex gloves_mutex_;
  std::map<std::string, std::shared_ptr<Device>> gloves_;

  mutable std::shared_mutex study_mutex_;
  std::map<std::string, std::vector<study::ConditionAssignment>> teams_;
};

/// Caller may act for `participant`: the participant themself or an analyst.
void require_participant(const Principal& who, const std::string& participant);
void require_analyst(const Principal& who);

std::string_view to_string(LiveState state);
std::string_view to_string(glove::Playback playback);
GloveCommandKind parse_glove_command(std::string_view text);

void to_json(nlohmann::json& j, const PerformanceResult& r);
void to_json(nlohmann::json& j, const DeviceStatus& s);
void to_json(nlohmann::json& j, const PassiveResult& r);
/// Progress points; the glove condition is included only for analysts.
nlohmann::json progress_json(const std::vector<analytics::ProgressPoint>& points, bool with_condition);

}  // namespace rehearse::api

namespace rehearse::stats {
void to_json(nlohmann::json& j, const PermutationResult& r);
}  // namespace rehearse::stats

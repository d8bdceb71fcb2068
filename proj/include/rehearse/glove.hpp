#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "rehearse/error.hpp"
#include "rehearse/frame.hpp"
#include "rehearse/haptic.hpp"

namespace rehearse::glove {

using std::chrono::microseconds;
using haptic::Hand;

enum class Role { master, slave };
enum class Playback { idle, playing, paused };

enum class StatusCode : std::uint8_t {
  ok = 0,
  missing_chunks = 1,
  no_schedule = 2,
  busy = 3,
  bad_schedule = 4,
  battery_empty = 5,
};

/// Battery model: capacity is three hours of playback. Playing drains 10
/// units per microsecond, idle drains 1.
inline constexpr std::int64_t kPlayDrainPerUs = 10;
inline constexpr std::int64_t kIdleDrainPerUs = 1;
inline constexpr std::int64_t kBatteryCapacity = 180LL * 60'000 * 1'000 * kPlayDrainPerUs;

inline constexpr std::size_t kChunkData = kMaxPayload - 4;

/// Schedule compiled for fast lookup of the pulses of one glove.
class PlaybackTrack {
 public:
  PlaybackTrack(haptic::StimulusSchedule schedule, Hand glove);

  const haptic::StimulusSchedule& schedule() const { return schedule_; }
  Hand glove() const { return glove_; }
  std::int64_t period_us() const { return period_us_; }
  std::int64_t end_us() const { return end_us_; }

  /// Index of the pulse covering `position_us` on `finger` (0-based), encoded
  /// as rep * pulses_on_finger + index; nullopt when the motor is off.
  std::optional<std::int64_t> active_pulse(int finger, std::int64_t position_us) const;
  /// Microseconds until any motor of this glove changes state or playback ends.
  std::int64_t until_next_change(std::int64_t position_us) const;
  const haptic::StimulusEvent& pulse(int finger, std::int64_t encoded) const;

 private:
  haptic::StimulusSchedule schedule_;
  Hand glove_;
  std::int64_t period_us_;
  std::int64_t end_us_;
  std::array<std::vector<haptic::StimulusEvent>, haptic::kFingersPerHand> by_finger_;
};

struct GloveState {
  Role role = Role::master;
  Hand glove = Hand::right;
  std::shared_ptr<const PlaybackTrack> schedule;
  Playback playback = Playback::idle;
  std::int64_t position_us = 0;
  bool completed = false;
  std::int64_t battery_units = kBatteryCapacity;
  std::int64_t clock_offset_ms = 0;          // slave only, last SYNC correction
  std::int64_t link_latency_us = 0;          // estimate of master->slave latency
  std::int64_t hold_us = 0;                  // master waits this long after Start for the slave
  std::array<double, haptic::kFingersPerHand> motor_levels{};
  std::array<std::optional<std::int64_t>, haptic::kFingersPerHand> active{};
  std::array<std::int64_t, haptic::kFingersPerHand> last_pulse{-1, -1, -1, -1, -1};

  // Upload reassembly.
  std::map<std::uint16_t, std::vector<std::uint8_t>> chunks;
  std::uint16_t expected_chunks = 0;

  std::uint8_t seq_to_host = 0;
  std::uint8_t seq_to_peer = 0;

  static GloveState make(Role role);

  double battery_pct() const { return 100.0 * static_cast<double>(battery_units) / kBatteryCapacity; }
  void set_battery_pct(double pct);
  double position_ms() const { return static_cast<double>(position_us) / 1000.0; }
};

struct StatusReport {
  StatusCode code = StatusCode::ok;
  double battery_pct = 100.0;
  Playback playback = Playback::idle;
  std::uint32_t position_ms = 0;
  std::uint16_t missing_chunks = 0;

  friend bool operator==(const StatusReport&, const StatusReport&) = default;
};

std::vector<std::uint8_t> encode_status(const StatusReport& report);
StatusReport decode_status(std::span<const std::uint8_t> payload);

struct CommandOutcome {
  GloveState state;
  std::optional<Frame> reply;
  std::vector<Frame> to_peer;  // master -> slave traffic
  std::optional<ErrorCode> error;
};

CommandOutcome apply_command(const GloveState& state, const Frame& frame);

struct MotorEdge {
  Hand glove = Hand::right;
  int finger = 1;
  std::int64_t position_us = 0;
  bool on = false;
};

/// Advances the glove clock by `dt`. Every motor switch inside the interval
/// is appended to `edges` at its exact playback position.
GloveState tick(const GloveState& state, microseconds dt, std::vector<MotorEdge>* edges = nullptr);

/// Time until the next motor or playback change; nullopt when not playing.
std::optional<microseconds> next_change(const GloveState& state);

/// Splits a schedule into SCHED_CHUNK frames plus the closing SCHED_COMMIT,
/// stamping consecutive sequence numbers starting at `seq`.
std::vector<Frame> upload_frames(const haptic::StimulusSchedule& schedule, std::uint8_t& seq);

Frame make_start(std::uint8_t seq, std::int64_t position_us = 0);
Frame make_sync(std::uint8_t seq, std::int64_t position_us);
Frame make_simple(MsgType type, std::uint8_t seq);

}  // namespace rehearse::glove

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rehearse/midi.hpp"

namespace rehearse::haptic {

using midi::Hand;

inline constexpr int kFingersPerHand = 5;

/// One vibration pulse on one motor. Motors on the same (glove, finger)
/// never overlap.
struct StimulusEvent {
  Hand glove = Hand::right;
  int finger = 1;
  std::int64_t start_ms = 0;
  std::int64_t duration_ms = 1;
  double intensity = 1.0;

  std::int64_t end_ms() const { return start_ms + duration_ms; }
  friend bool operator==(const StimulusEvent&, const StimulusEvent&) = default;
};

/// A song rendered as motor pulses, looped `repetitions` times with
/// `loop_gap_ms` of silence after each pass.
struct StimulusSchedule {
  std::vector<StimulusEvent> events;
  std::int64_t span_ms = 0;
  std::int64_t loop_gap_ms = 0;
  std::int64_t repetitions = 1;
  std::string song_ref;
  bool sham = false;

  std::int64_t period_ms() const { return span_ms + loop_gap_ms; }
  std::int64_t playback_ms() const { return repetitions * period_ms(); }
  friend bool operator==(const StimulusSchedule&, const StimulusSchedule&) = default;
};

struct CompileConfig {
  std::int64_t max_pulse_ms = 250;
  std::int64_t min_gap_ms = 50;
  std::int64_t loop_gap_ms = 2000;
  double intensity = 1.0;
};

/// Fills hand and finger on events that lack them. Pitches below middle C go
/// to the left hand. Each hand's pitch range is cut into five equal bands;
/// right-hand bands map low to high onto fingers 1..5, left-hand bands are
/// mirrored so the thumb takes the highest band.
midi::SongScore assign_fingers(const midi::SongScore& song);

/// Renders a fingered song into a looping pulse schedule that fits in
/// `session_minutes`.
StimulusSchedule compile_schedule(const midi::SongScore& song, double session_minutes,
                                  const CompileConfig& config = {}, bool sham = false);

/// Same events and timing, device drive suppressed.
StimulusSchedule as_sham(StimulusSchedule schedule);

/// Events of one glove only; timing fields unchanged.
StimulusSchedule select_glove(const StimulusSchedule& schedule, Hand glove);

// Line-record text format:
//   # rehearse stimulus schedule v1
//   @song_ref <id>
//   @span_ms <n>
//   @loop_gap_ms <n>
//   @repetitions <n>
//   @sham <0|1>
//   <left|right> <finger> <start_ms> <duration_ms> <intensity>
std::string serialize_schedule(const StimulusSchedule& schedule);
StimulusSchedule parse_schedule(std::string_view text);

}  // namespace rehearse::haptic

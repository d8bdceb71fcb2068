#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rehearse::midi {

enum class Hand { left, right };

/// One key press. All times are integer milliseconds.
struct NoteEvent {
  int pitch = 60;
  std::int64_t onset_ms = 0;
  std::int64_t duration_ms = 1;
  int velocity = 64;
  std::optional<Hand> hand;
  std::optional<int> finger;  // 1 = thumb .. 5 = little finger

  friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

/// Song ordering: onset ascending, ties by ascending pitch.
bool event_order(const NoteEvent& a, const NoteEvent& b);
void sort_events(std::vector<NoteEvent>& events);

struct TempoChange {
  std::int64_t tick = 0;
  std::uint32_t us_per_quarter = 500000;

  friend bool operator==(const TempoChange&, const TempoChange&) = default;
};

struct SongScore {
  std::string id;
  std::string title;
  std::vector<NoteEvent> events;
  std::vector<TempoChange> tempo_map{TempoChange{}};
  int ppq = 480;

  friend bool operator==(const SongScore&, const SongScore&) = default;
};

struct ParseDiagnostics {
  int unterminated_notes = 0;  // note-ons closed at track end
  int orphan_note_offs = 0;
  int skipped_chunks = 0;
};

struct ParsedSong {
  SongScore song;
  ParseDiagnostics diagnostics;
};

/// Converts an absolute tick to milliseconds by integrating over the tempo
/// segments. Rounds half up; monotone in tick.
std::int64_t ticks_to_ms(std::int64_t tick, std::span<const TempoChange> tempo_map, int ppq);

/// Parses a format 0 or 1 Standard MIDI File.
ParsedSong parse_smf(std::span<const std::uint8_t> bytes);

/// Writes a format 0 file. The writer uses 1000 ticks per quarter at
/// 1 000 000 us/quarter so one tick is one millisecond and re-parsing is exact.
std::vector<std::uint8_t> write_smf(const SongScore& song);

enum class MessageKind { note_on, note_off };

struct TimedMessage {
  std::int64_t time_ms = 0;
  MessageKind kind = MessageKind::note_on;
  int pitch = 60;
  int velocity = 64;
};

struct CaptureResult {
  std::vector<NoteEvent> events;
  int orphan_note_offs = 0;
  int unterminated_notes = 0;
};

/// Resolves a live note-on/off stream into NoteEvents. Same pairing rules as
/// parse_smf: velocity-0 note-on is a note-off, re-struck keys pair LIFO.
CaptureResult capture_events(std::span<const TimedMessage> stream);

/// Stable content hash used as a song id (FNV-1a 64, hex).
std::string content_id(std::span<const std::uint8_t> bytes);

}  // namespace rehearse::midi

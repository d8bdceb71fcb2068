#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rehearse/midi.hpp"

namespace rehearse::perf {

inline constexpr std::int64_t kDefaultChordWindowMs = 30;

enum class TokenKind { note, chord };

/// Alignment unit: one note, or an unordered set of pitches struck together.
/// `pitches` is kept sorted and duplicate-free.
struct Token {
  TokenKind kind = TokenKind::note;
  std::vector<int> pitches;
  std::int64_t onset_ms = 0;

  static Token note(int pitch, std::int64_t onset_ms) { return {TokenKind::note, {pitch}, onset_ms}; }
  /// Builds a token from any pitch list; the kind follows the distinct count.
  static Token from_pitches(std::vector<int> pitches, std::int64_t onset_ms);

  friend bool operator==(const Token&, const Token&) = default;
};

enum class Source { reference, live, test };

struct Performance {
  std::vector<Token> tokens;
  Source source = Source::live;
  std::optional<std::uint64_t> session_ref;

  friend bool operator==(const Performance&, const Performance&) = default;
};

/// Groups onset runs into chords. A run starts at an event and absorbs every
/// following event whose onset is within `chord_window_ms` of the run's first
/// onset (anchored, not rolling).
std::vector<Token> extract_chords(std::span<const midi::NoteEvent> events,
                                  std::int64_t chord_window_ms = kDefaultChordWindowMs);

/// Re-runs grouping over existing tokens; a no-op on extract_chords output.
std::vector<Token> extract_chords(std::span<const Token> tokens,
                                  std::int64_t chord_window_ms = kDefaultChordWindowMs);

/// Shifts `perf` so its first onset equals the first onset of `ref`.
Performance rebase_times(const Performance& perf, const Performance& ref);

/// Human-readable pitch set: "C4" or "{C4 E4 G4}".
std::string token_label(const Token& token);
std::string pitch_name(int pitch);

}  // namespace rehearse::perf

#include "rehearse/perf.hpp"

#include <algorithm>
#include <array>

#include "rehearse/error.hpp"

namespace rehearse::perf {

namespace {

struct Strike {
  std::int64_t onset_ms;
  std::span<const int> pitches;
};

template <class Range>
std::vector<Token> group_runs(const Range& strikes, std::int64_t window) {
  if (window <= 0) throw Error(ErrorCode::InvalidConfig, "chord window must be positive");
  std::vector<Token> out;
  std::vector<int> run_pitches;
  std::int64_t run_start = 0;
  bool open = false;
  auto flush = [&] {
    if (open) out.push_back(Token::from_pitches(std::move(run_pitches), run_start));
    run_pitches.clear();
  };
  for (const Strike& s : strikes) {
    if (!open || s.onset_ms - run_start > window) {
      flush();
      run_start = s.onset_ms;
      open = true;
    }
    run_pitches.insert(run_pitches.end(), s.pitches.begin(), s.pitches.end());
  }
  flush();
  return out;
}

}  // namespace

Token Token::from_pitches(std::vector<int> pitches, std::int64_t onset_ms) {
  std::sort(pitches.begin(), pitches.end());
  pitches.erase(std::unique(pitches.begin(), pitches.end()), pitches.end());
  const auto kind = pitches.size() > 1 ? TokenKind::chord : TokenKind::note;
  return {kind, std::move(pitches), onset_ms};
}

std::vector<Token> extract_chords(std::span<const midi::NoteEvent> events, std::int64_t chord_window_ms) {
  std::vector<Strike> strikes;
  strikes.reserve(events.size());
  for (const auto& ev : events) strikes.push_back({ev.onset_ms, std::span<const int>(&ev.pitch, 1)});
  return group_runs(strikes, chord_window_ms);
}

std::vector<Token> extract_chords(std::span<const Token> tokens, std::int64_t chord_window_ms) {
  std::vector<Strike> strikes;
  strikes.reserve(tokens.size());
  for (const auto& t : tokens) strikes.push_back({t.onset_ms, t.pitches});
  return group_runs(strikes, chord_window_ms);
}

Performance rebase_times(const Performance& perf, const Performance& ref) {
  if (perf.tokens.empty() || ref.tokens.empty()) {
    throw Error(ErrorCode::EmptyPerformance, "rebase needs non-empty performances");
  }
  const std::int64_t offset = ref.tokens.front().onset_ms - perf.tokens.front().onset_ms;
  Performance out = perf;
  for (auto& t : out.tokens) t.onset_ms += offset;
  return out;
}

std::string pitch_name(int pitch) {
  static constexpr std::array<const char*, 12> names{"C", "C#", "D", "D#", "E", "F",
                                                     "F#", "G", "G#", "A", "A#", "B"};
  return std::string(names[static_cast<std::size_t>(pitch % 12)]) + std::to_string(pitch / 12 - 1);
}

std::string token_label(const Token& token) {
  if (token.pitches.size() == 1) return pitch_name(token.pitches.front());
  std::string out = "{";
  for (std::size_t i = 0; i < token.pitches.size(); ++i) {
    if (i) out += ' ';
    out += pitch_name(token.pitches[i]);
  }
  return out + "}";
}

}  // namespace rehearse::perf

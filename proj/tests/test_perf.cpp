#include <map>
#include <random>

#include "doctest.h"
#include "rehearse/error.hpp"
#include "rehearse/perf.hpp"

using namespace rehearse;
using namespace rehearse::perf;
using midi::NoteEvent;

namespace {

NoteEvent note(int pitch, std::int64_t onset) { return {pitch, onset, 100, 64, std::nullopt, std::nullopt}; }

std::vector<NoteEvent> random_events(std::mt19937_64& rng, int count) {
  std::vector<NoteEvent> out;
  std::int64_t t = 0;
  for (int i = 0; i < count; ++i) {
    t += static_cast<std::int64_t>(rng() % 60);
    out.push_back(note(static_cast<int>(48 + rng() % 12), t));
  }
  midi::sort_events(out);
  return out;
}

}  // namespace

TEST_CASE("extract_chords examples") {
  const std::vector<NoteEvent> single{note(60, 0)};
  auto t = extract_chords(single, 30);
  REQUIRE(t.size() == 1);
  CHECK(t[0].kind == TokenKind::note);

  const std::vector<NoteEvent> three{note(60, 0), note(64, 10), note(67, 20)};
  t = extract_chords(three, 30);
  REQUIRE(t.size() == 1);
  CHECK(t[0].kind == TokenKind::chord);
  CHECK(t[0].pitches == std::vector<int>{60, 64, 67});
  CHECK(t[0].onset_ms == 0);

  const std::vector<NoteEvent> split{note(60, 0), note(64, 10), note(67, 50)};
  t = extract_chords(split, 30);
  REQUIRE(t.size() == 2);
  CHECK(t[0].pitches == std::vector<int>{60, 64});
  CHECK(t[1] == Token::note(67, 50));

  CHECK(extract_chords(std::vector<NoteEvent>{}, 30).empty());
}

TEST_CASE("chord window is anchored on the first onset, not rolling") {
  // 0, 25, 50: each gap is within 30 but 50 - 0 is not.
  const std::vector<NoteEvent> arpeggio{note(60, 0), note(64, 25), note(67, 50)};
  const auto t = extract_chords(arpeggio, 30);
  REQUIRE(t.size() == 2);
  CHECK(t[0].pitches == std::vector<int>{60, 64});
  CHECK(t[1].onset_ms == 50);
  // exactly at the window edge still joins
  CHECK(extract_chords(std::vector<NoteEvent>{note(60, 0), note(62, 30)}, 30).size() == 1);
}

TEST_CASE("duplicate pitches inside a window collapse") {
  const auto t = extract_chords(std::vector<NoteEvent>{note(60, 0), note(60, 5)}, 30);
  REQUIRE(t.size() == 1);
  CHECK(t[0].kind == TokenKind::note);
  CHECK(t[0].pitches == std::vector<int>{60});
}

TEST_CASE("extract_chords properties over random input") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto events = random_events(rng, 1 + static_cast<int>(rng() % 30));
    const std::int64_t window = 1 + static_cast<std::int64_t>(rng() % 60);
    const auto tokens = extract_chords(events, window);

    // idempotent
    CHECK(extract_chords(tokens, window) == tokens);

    // strictly increasing onsets and kind/pitch-count agreement
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) CHECK(tokens[i].onset_ms > tokens[i - 1].onset_ms);
      CHECK((tokens[i].kind == TokenKind::note) == (tokens[i].pitches.size() == 1));
    }

    // pitch multiset preserved up to in-run duplicates: every token's pitch
    // set equals the distinct pitches of the events it covers.
    std::size_t e = 0;
    for (const auto& tok : tokens) {
      std::vector<int> covered;
      while (e < events.size() && events[e].onset_ms - tok.onset_ms <= window && events[e].onset_ms >= tok.onset_ms) {
        covered.push_back(events[e].pitch);
        ++e;
      }
      CHECK(Token::from_pitches(covered, tok.onset_ms) == tok);
    }
    CHECK(e == events.size());
  }
}

TEST_CASE("rebase_times") {
  Performance ref{{Token::note(60, 0), Token::note(62, 500)}, Source::reference, {}};
  Performance aligned{{Token::note(60, 0), Token::note(62, 480)}, Source::live, {}};
  CHECK(rebase_times(aligned, ref) == aligned);

  Performance late{{Token::note(60, 1000), Token::note(62, 1500)}, Source::live, {}};
  const auto shifted = rebase_times(late, ref);
  CHECK(shifted.tokens[0].onset_ms == 0);
  CHECK(shifted.tokens[1].onset_ms == 500);

  Performance ref400{{Token::note(60, 400)}, Source::reference, {}};
  Performance early{{Token::note(60, 100), Token::note(64, 250)}, Source::live, {}};
  const auto up = rebase_times(early, ref400);
  CHECK(up.tokens[0].onset_ms == 400);
  CHECK(up.tokens[1].onset_ms == 550);

  Performance empty;
  CHECK_THROWS_AS(rebase_times(empty, ref), Error);
  CHECK_THROWS_AS(rebase_times(late, empty), Error);
}

TEST_CASE("rebase_times preserves pairwise differences") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Performance p, r;
    std::int64_t t = static_cast<std::int64_t>(rng() % 5000);
    for (int i = 0; i < 10; ++i) {
      t += 1 + static_cast<std::int64_t>(rng() % 400);
      p.tokens.push_back(Token::note(60, t));
    }
    r.tokens.push_back(Token::note(60, static_cast<std::int64_t>(rng() % 5000)));
    const auto out = rebase_times(p, r);
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      for (std::size_t j = 0; j < p.tokens.size(); ++j) {
        CHECK(out.tokens[i].onset_ms - out.tokens[j].onset_ms == p.tokens[i].onset_ms - p.tokens[j].onset_ms);
      }
    }
  }
}

TEST_CASE("token labels") {
  CHECK(pitch_name(60) == "C4");
  CHECK(pitch_name(69) == "A4");
  CHECK(token_label(Token::from_pitches({64, 60, 67}, 0)) == "{C4 E4 G4}");
}

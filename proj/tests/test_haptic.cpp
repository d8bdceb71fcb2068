#include <algorithm>
#include <map>
#include <random>

#include "doctest.h"
#include "rehearse/error.hpp"
#include "rehearse/haptic.hpp"

using namespace rehearse;
using namespace rehearse::haptic;
using midi::NoteEvent;
using midi::SongScore;

namespace {

NoteEvent fingered(int pitch, std::int64_t onset, std::int64_t dur, Hand hand, int finger) {
  return {pitch, onset, dur, 80, hand, finger};
}

SongScore song_of(std::vector<NoteEvent> events) {
  SongScore s;
  s.id = "test-song";
  s.events = std::move(events);
  return s;
}

SongScore random_song(std::mt19937_64& rng, int notes) {
  std::vector<NoteEvent> ev;
  std::int64_t t = 0;
  for (int i = 0; i < notes; ++i) {
    t += static_cast<std::int64_t>(rng() % 400);
    const int pitch = 40 + static_cast<int>(rng() % 50);
    ev.push_back({pitch, t, 1 + static_cast<std::int64_t>(rng() % 600), 90, std::nullopt, std::nullopt});
  }
  return assign_fingers(song_of(ev));
}

bool no_motor_overlap(const StimulusSchedule& s) {
  std::map<std::pair<Hand, int>, std::int64_t> busy_until;
  for (const auto& ev : s.events) {
    auto [it, fresh] = busy_until.try_emplace({ev.glove, ev.finger}, ev.end_ms());
    if (!fresh) {
      if (ev.start_ms < it->second) return false;
      it->second = ev.end_ms();
    }
  }
  return true;
}

}  // namespace

TEST_CASE("annotated events pass through") {
  const auto s = assign_fingers(song_of({fingered(50, 0, 100, Hand::right, 2)}));
  REQUIRE(s.events.size() == 1);
  CHECK(s.events[0].hand == Hand::right);
  CHECK(s.events[0].finger == 2);
}

TEST_CASE("right-hand range splits into five bands") {
  std::vector<NoteEvent> ev;
  std::int64_t t = 0;
  for (int p : {60, 64, 67, 72, 76}) ev.push_back({p, t += 500, 200, 80, std::nullopt, std::nullopt});
  const auto s = assign_fingers(song_of(ev));
  for (int i = 0; i < 5; ++i) {
    CHECK(s.events[static_cast<std::size_t>(i)].hand == Hand::right);
    CHECK(s.events[static_cast<std::size_t>(i)].finger == i + 1);
  }
}

TEST_CASE("pitches below middle C go left, thumb takes the top band") {
  std::vector<NoteEvent> ev;
  std::int64_t t = 0;
  for (int p : {40, 44, 47, 52, 56}) ev.push_back({p, t += 500, 200, 80, std::nullopt, std::nullopt});
  const auto s = assign_fingers(song_of(ev));
  for (int i = 0; i < 5; ++i) {
    CHECK(s.events[static_cast<std::size_t>(i)].hand == Hand::left);
    CHECK(s.events[static_cast<std::size_t>(i)].finger == 5 - i);
  }
}

TEST_CASE("every event gets hand and finger") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_song(rng, 1 + static_cast<int>(rng() % 60));
    for (const auto& e : s.events) {
      REQUIRE(e.hand.has_value());
      REQUIRE(e.finger.has_value());
      CHECK(*e.finger >= 1);
      CHECK(*e.finger <= 5);
      CHECK((*e.hand == Hand::left) == (e.pitch < 60));
    }
  }
}

TEST_CASE("repetitions for a 60 s song in 150 minutes") {
  const auto s = song_of({fingered(60, 0, 200, Hand::right, 1), fingered(62, 59800, 200, Hand::right, 2)});
  const auto sched = compile_schedule(s, 150);
  CHECK(sched.span_ms == 60000);
  CHECK(sched.repetitions == 145);
  CHECK(sched.playback_ms() == 145 * 62000);
  CHECK(sched.playback_ms() <= 150 * 60000);
}

TEST_CASE("min gap truncates the earlier pulse") {
  const auto s = song_of({fingered(60, 0, 200, Hand::right, 1), fingered(60, 120, 200, Hand::right, 1)});
  const auto sched = compile_schedule(s, 10);
  REQUIRE(sched.events.size() == 2);
  CHECK(sched.events[0].duration_ms == 70);
  CHECK(sched.events[1].duration_ms == 200);
}

TEST_CASE("pulses cap at max_pulse_ms") {
  const auto sched = compile_schedule(song_of({fingered(60, 0, 2000, Hand::right, 1)}), 10);
  CHECK(sched.events[0].duration_ms == 250);
  CHECK(sched.span_ms == 2000);
}

TEST_CASE("chords fire simultaneous events on distinct fingers") {
  const auto s = song_of({fingered(60, 0, 300, Hand::right, 1), fingered(64, 0, 300, Hand::right, 3),
                          fingered(48, 0, 300, Hand::left, 2)});
  const auto sched = compile_schedule(s, 10);
  REQUIRE(sched.events.size() == 3);
  for (const auto& e : sched.events) CHECK(e.start_ms == 0);
}

TEST_CASE("compile errors") {
  std::vector<NoteEvent> ev{{60, 0, 100, 80, std::nullopt, std::nullopt}};
  try {
    compile_schedule(song_of(ev), 10);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnfingeredEvent);
  }
  try {
    compile_schedule(song_of({fingered(60, 0, 120000, Hand::right, 1)}), 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SongLongerThanSession);
  }
  CHECK_THROWS_AS(compile_schedule(song_of({fingered(60, 0, 10, Hand::right, 1)}), 0), Error);
}

TEST_CASE("compiled schedule properties") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto song = random_song(rng, 1 + static_cast<int>(rng() % 80));
    const auto sched = compile_schedule(song, 150);
    CHECK(no_motor_overlap(sched));
    CHECK(sched.playback_ms() <= 150 * 60000);
    CHECK(sched.repetitions == 150 * 60000 / sched.period_ms());
    CHECK(std::is_sorted(sched.events.begin(), sched.events.end(),
                         [](const auto& a, const auto& b) { return a.start_ms < b.start_ms; }));

    // pulse onsets are exactly the distinct (motor, onset) strikes of the song
    std::vector<std::int64_t> song_onsets, pulse_onsets;
    std::map<std::tuple<Hand, int, std::int64_t>, int> seen;
    for (const auto& e : song.events) {
      if (seen[{*e.hand, *e.finger, e.onset_ms}]++ == 0) song_onsets.push_back(e.onset_ms);
    }
    for (const auto& e : sched.events) pulse_onsets.push_back(e.start_ms);
    std::sort(song_onsets.begin(), song_onsets.end());
    CHECK(song_onsets == pulse_onsets);

    const auto sham = as_sham(sched);
    CHECK(sham.sham);
    CHECK(sham.events == sched.events);
    CHECK(compile_schedule(song, 150, {}, true) == sham);
  }
}

TEST_CASE("select_glove keeps one side") {
  const auto s = song_of({fingered(60, 0, 300, Hand::right, 1), fingered(48, 10, 300, Hand::left, 2)});
  const auto sched = compile_schedule(s, 10);
  const auto left = select_glove(sched, Hand::left);
  REQUIRE(left.events.size() == 1);
  CHECK(left.events[0].glove == Hand::left);
  CHECK(left.repetitions == sched.repetitions);
  CHECK(left.span_ms == sched.span_ms);
}

TEST_CASE("schedule text round trip") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    auto sched = compile_schedule(random_song(rng, 20), 30, {250, 50, 2000, 0.75}, trial % 2 == 0);
    CHECK(parse_schedule(serialize_schedule(sched)) == sched);
  }
}

TEST_CASE("malformed schedule text") {
  CHECK_THROWS_AS(parse_schedule(""), Error);
  CHECK_THROWS_AS(parse_schedule("@repetitions 1\nright 6 0 10 1\n"), Error);
  CHECK_THROWS_AS(parse_schedule("@repetitions 1\nmiddle 1 0 10 1\n"), Error);
  CHECK_THROWS_AS(parse_schedule("@repetitions 1\nright 1 0 0 1\n"), Error);
  CHECK_THROWS_AS(parse_schedule("@repetitions 1\nright 1 0 10\n"), Error);
  CHECK_THROWS_AS(parse_schedule("@repetitions x\n"), Error);
  CHECK_NOTHROW(parse_schedule("# c\n@repetitions 2\n@span_ms 10\nleft 1 0 10 0.5\n"));
}

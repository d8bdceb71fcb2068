#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rehearse/error.hpp"
#include "rehearse/midi.hpp"
#include "smf_builder.hpp"

using namespace rehearse;
using namespace rehearse::midi;
using B = SmfBuilder;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

std::vector<std::uint8_t> single_note_file() {
  auto file = B::header(0, 1, 480);
  B::track(file, B::cat({B::tempo(0, 500000), B::event(0, {0x90, 60, 100}), B::event(480, {0x80, 60, 0})}));
  return file;
}

}  // namespace

TEST_CASE("ticks_to_ms single segment and origin") {
  const std::vector<TempoChange> tempo{{0, 500000}};
  CHECK(ticks_to_ms(0, tempo, 480) == 0);
  CHECK(ticks_to_ms(480, tempo, 480) == 500);
  CHECK(oracle::tick_walk_ms(480, {{0, 500000}}, 480) == doctest::Approx(500.0));
}

TEST_CASE("ticks_to_ms integrates across a tempo change") {
  const std::vector<TempoChange> tempo{{0, 500000}, {480, 250000}};
  CHECK(ticks_to_ms(960, tempo, 480) == 750);
  CHECK(oracle::tick_walk_ms(960, {{0, 500000}, {480, 250000}}, 480) == doctest::Approx(750.0));
}

TEST_CASE("ticks_to_ms matches per-tick walk and is monotone") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<TempoChange> tempo{{0, static_cast<std::uint32_t>(200000 + rng() % 800000)}};
    std::vector<std::pair<std::int64_t, std::uint32_t>> plain{{0, tempo[0].us_per_quarter}};
    std::int64_t at = 0;
    for (int k = 0; k < 3; ++k) {
      at += 1 + static_cast<std::int64_t>(rng() % 400);
      tempo.push_back({at, static_cast<std::uint32_t>(200000 + rng() % 800000)});
      plain.emplace_back(at, tempo.back().us_per_quarter);
    }
    const int ppq = 96 + static_cast<int>(rng() % 900);
    std::int64_t prev = -1;
    for (std::int64_t tick = 0; tick < 1500; tick += 37) {
      const auto ms = ticks_to_ms(tick, tempo, ppq);
      CHECK(ms >= prev);
      prev = ms;
      CHECK(std::abs(static_cast<double>(ms) - oracle::tick_walk_ms(tick, plain, ppq)) <= 0.5 + 1e-6);
    }
  }
}

TEST_CASE("ticks_to_ms rejects an empty tempo map") {
  CHECK(code_of([] { ticks_to_ms(10, {}, 480); }) == ErrorCode::EmptyTempoMap);
}

TEST_CASE("parse_smf single note") {
  const auto parsed = parse_smf(single_note_file());
  REQUIRE(parsed.song.events.size() == 1);
  const auto& ev = parsed.song.events[0];
  CHECK(ev.pitch == 60);
  CHECK(ev.onset_ms == 0);
  CHECK(ev.duration_ms == 500);
  CHECK(ev.velocity == 100);
  CHECK(parsed.song.ppq == 480);
  CHECK(parsed.diagnostics.unterminated_notes == 0);
}

TEST_CASE("parse_smf empty track gives empty song") {
  auto file = B::header(0, 1, 480);
  B::track(file, {});
  const auto parsed = parse_smf(file);
  CHECK(parsed.song.events.empty());
  CHECK_FALSE(parsed.song.tempo_map.empty());
}

TEST_CASE("parse_smf mid-track tempo change") {
  auto file = B::header(0, 1, 480);
  B::track(file, B::cat({B::tempo(0, 500000), B::tempo(480, 250000), B::event(480, {0x90, 64, 90}),
                         B::event(240, {0x80, 64, 0})}));
  const auto song = parse_smf(file).song;
  REQUIRE(song.events.size() == 1);
  CHECK(song.events[0].onset_ms == 750);
  CHECK(song.events[0].duration_ms == 125);
}

TEST_CASE("parse_smf running status and velocity-zero note-off") {
  auto file = B::header(0, 1, 480);
  // 90 60 100 | (running) 64 100 | 60 0 | 64 0
  B::track(file, B::cat({B::event(0, {0x90, 60, 100}), B::event(0, {64, 100}), B::event(480, {60, 0}),
                         B::event(240, {64, 0})}));
  const auto song = parse_smf(file).song;
  REQUIRE(song.events.size() == 2);
  CHECK(song.events[0].pitch == 60);
  CHECK(song.events[0].duration_ms == 500);
  CHECK(song.events[1].pitch == 64);
  CHECK(song.events[1].duration_ms == 750);
}

TEST_CASE("parse_smf pairs re-struck keys LIFO") {
  auto file = B::header(0, 1, 1000);
  B::track(file, B::cat({B::tempo(0, 1000000), B::event(0, {0x90, 60, 80}), B::event(100, {0x90, 60, 80}),
                         B::event(100, {0x80, 60, 0}), B::event(300, {0x80, 60, 0})}));
  const auto song = parse_smf(file).song;
  REQUIRE(song.events.size() == 2);
  CHECK(song.events[0].onset_ms == 0);
  CHECK(song.events[0].duration_ms == 500);
  CHECK(song.events[1].onset_ms == 100);
  CHECK(song.events[1].duration_ms == 100);
}

TEST_CASE("parse_smf closes unterminated notes at track end") {
  auto file = B::header(0, 1, 480);
  B::track(file, B::cat({B::event(0, {0x90, 60, 80}), B::event(960, {0xFF, 0x01, 0x00})}));
  const auto parsed = parse_smf(file);
  REQUIRE(parsed.song.events.size() == 1);
  CHECK(parsed.diagnostics.unterminated_notes == 1);
  CHECK(parsed.song.events[0].duration_ms == 1000);
}

TEST_CASE("parse_smf format 1 takes tempo from the conductor track") {
  auto file = B::header(1, 2, 480);
  B::track(file, B::cat({B::tempo(0, 250000)}));
  B::track(file, B::cat({B::event(480, {0x91, 67, 70}), B::event(480, {0x81, 67, 0})}));
  const auto song = parse_smf(file).song;
  REQUIRE(song.events.size() == 1);
  CHECK(song.events[0].onset_ms == 250);
  CHECK(song.events[0].duration_ms == 250);
}

TEST_CASE("parse_smf errors") {
  CHECK(code_of([] { parse_smf(std::vector<std::uint8_t>{'M', 'T', 'h'}); }) == ErrorCode::MalformedHeader);
  auto bad_magic = single_note_file();
  bad_magic[0] = 'X';
  CHECK(code_of([&] { parse_smf(bad_magic); }) == ErrorCode::MalformedHeader);
  auto fmt2 = B::header(2, 1, 480);
  B::track(fmt2, {});
  CHECK(code_of([&] { parse_smf(fmt2); }) == ErrorCode::UnsupportedFormat);
  auto truncated = single_note_file();
  truncated.resize(truncated.size() - 6);
  CHECK(code_of([&] { parse_smf(truncated); }) == ErrorCode::MalformedTrack);
}

TEST_CASE("write_smf then parse_smf reproduces the events") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    SongScore song;
    song.title = "trial";
    for (int i = 0; i < 40; ++i) {
      song.events.push_back({static_cast<int>(21 + rng() % 88), static_cast<std::int64_t>(rng() % 20000),
                             static_cast<std::int64_t>(1 + rng() % 1500), static_cast<int>(1 + rng() % 127),
                             std::nullopt, std::nullopt});
    }
    sort_events(song.events);
    const auto back = parse_smf(write_smf(song)).song;
    REQUIRE(back.events.size() == song.events.size());
    for (std::size_t i = 0; i < song.events.size(); ++i) {
      CHECK(back.events[i].pitch == song.events[i].pitch);
      CHECK(std::abs(back.events[i].onset_ms - song.events[i].onset_ms) <= 1);
      CHECK(std::abs(back.events[i].duration_ms - song.events[i].duration_ms) <= 1);
      CHECK(back.events[i].duration_ms > 0);
    }
    CHECK(back.title == "trial");
  }
}

TEST_CASE("capture_events pairing") {
  CHECK(capture_events({}).events.empty());

  const std::vector<TimedMessage> one{{0, MessageKind::note_on, 60, 90}, {300, MessageKind::note_off, 60, 0}};
  const auto r1 = capture_events(one);
  REQUIRE(r1.events.size() == 1);
  CHECK(r1.events[0] == NoteEvent{60, 0, 300, 90, std::nullopt, std::nullopt});

  const std::vector<TimedMessage> two{{0, MessageKind::note_on, 60, 90},
                                      {10, MessageKind::note_on, 64, 90},
                                      {200, MessageKind::note_off, 64, 0},
                                      {300, MessageKind::note_off, 60, 0}};
  const auto r2 = capture_events(two);
  REQUIRE(r2.events.size() == 2);
  CHECK(r2.events[0].pitch == 60);
  CHECK(r2.events[0].duration_ms == 300);
  CHECK(r2.events[1].pitch == 64);
  CHECK(r2.events[1].duration_ms == 190);
}

TEST_CASE("capture_events tallies orphan note-offs and rejects time going backwards") {
  const std::vector<TimedMessage> orphan{{0, MessageKind::note_off, 60, 0}, {5, MessageKind::note_on, 62, 50},
                                         {50, MessageKind::note_on, 62, 0}};
  const auto r = capture_events(orphan);
  CHECK(r.orphan_note_offs == 1);
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].duration_ms == 45);

  const std::vector<TimedMessage> backwards{{10, MessageKind::note_on, 60, 50}, {5, MessageKind::note_off, 60, 0}};
  CHECK(code_of([&] { capture_events(backwards); }) == ErrorCode::NonMonotoneTimestamps);
}

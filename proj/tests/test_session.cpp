#include <filesystem>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "rehearse/error.hpp"
#include "rehearse/progress.hpp"

using namespace rehearse;
using namespace rehearse::analytics;

namespace {

SessionRecord test_session(const std::string& who, int day, SessionKind kind, double score,
                           const std::string& song = "song-a") {
  SessionRecord r;
  r.participant_id = who;
  r.day = day;
  r.kind = kind;
  r.song_ref = song;
  r.performance = perf::Performance{{perf::Token::note(60, 0)}, perf::Source::test, std::nullopt};
  eval::EvalReport rep;
  rep.score = score;
  r.eval = rep;
  r.started_at_ms = 1'700'000'000'000 + day * 86'400'000LL;
  r.ended_at_ms = r.started_at_ms + 60'000;
  return r;
}

SessionRecord passive(const std::string& who, int day, GloveCondition c, double minutes = 150.0,
                      const std::string& song = "song-a") {
  SessionRecord r;
  r.participant_id = who;
  r.day = day;
  r.kind = SessionKind::passive;
  r.song_ref = song;
  r.glove_condition = c;
  r.started_at_ms = 1'700'000'000'000 + day * 86'400'000LL;
  r.ended_at_ms = r.started_at_ms + static_cast<std::int64_t>(minutes * 60'000);
  return r;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("rehearse-test-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("record validation") {
  SessionStore store;
  auto no_eval = test_session("p1", 1, SessionKind::pre_test, 50);
  no_eval.eval.reset();
  CHECK(code_of([&] { store.record(no_eval); }) == ErrorCode::MissingEval);

  CHECK(code_of([&] { store.record(passive("p1", 1, GloveCondition::none)); }) == ErrorCode::InvalidRecord);

  auto backwards = passive("p1", 1, GloveCondition::sham);
  backwards.ended_at_ms = backwards.started_at_ms - 1;
  CHECK(code_of([&] { store.record(backwards); }) == ErrorCode::InvalidRecord);

  store.record(test_session("p1", 1, SessionKind::pre_test, 50));
  CHECK(code_of([&] { store.record(test_session("p1", 1, SessionKind::pre_test, 60)); }) ==
        ErrorCode::DuplicateSession);
  CHECK(store.size() == 1);

  SessionRecord practice;
  practice.participant_id = "p1";
  practice.kind = SessionKind::practice;
  CHECK_NOTHROW(store.record(practice));
}

TEST_CASE("passive completeness") {
  SessionStore store;
  const auto a = store.record(passive("p", 1, GloveCondition::functional, 150));
  const auto b = store.record(passive("p", 2, GloveCondition::functional, 146));
  const auto c = store.record(passive("p", 3, GloveCondition::functional, 120));
  CHECK(store.get(a)->complete);
  CHECK(store.get(b)->complete);
  CHECK_FALSE(store.get(c)->complete);
}

TEST_CASE("ids and lookup") {
  SessionStore store;
  const auto a = store.record(test_session("p1", 1, SessionKind::pre_test, 40));
  const auto b = store.record(test_session("p2", 1, SessionKind::pre_test, 45));
  CHECK(a != b);
  CHECK(store.get(a)->participant_id == "p1");
  CHECK(!store.get(999));
  CHECK(store.find("p2", 1, SessionKind::pre_test, "song-a")->id == b);
  CHECK(!store.find("p2", 1, SessionKind::post_test, "song-a"));
  CHECK(store.participants() == std::vector<std::string>{"p1", "p2"});
  CHECK(store.for_participant("p1").size() == 1);
}

TEST_CASE("file-backed store replays identically") {
  TempDir dir;
  const auto log = dir.path / "sessions.jsonl";
  std::vector<SessionRecord> written;
  {
    SessionStore store(log);
    store.record(test_session("p1", 1, SessionKind::pre_test, 40));
    store.record(test_session("p1", 1, SessionKind::post_test, 55.5));
    store.record(passive("p1", 1, GloveCondition::sham));
    written = store.all();
  }
  SessionStore again(log);
  CHECK(again.all() == written);
  const auto id = again.record(test_session("p1", 2, SessionKind::pre_test, 52));
  CHECK(id == written.back().id + 1);
  for (const auto& r : written) CHECK(again.raw_line(r.id).has_value());
}

TEST_CASE("torn final line is dropped, earlier corruption is fatal") {
  TempDir dir;
  const auto log = dir.path / "sessions.jsonl";
  {
    SessionStore store(log);
    store.record(test_session("p1", 1, SessionKind::pre_test, 40));
  }
  {
    std::ofstream out(log, std::ios::app);
    out << "{\"id\": 2, \"partic";
  }
  {
    SessionStore store(log);
    CHECK(store.size() == 1);
  }
  {
    std::ofstream out(log, std::ios::trunc);
    out << "not json\n{\"x\":1}\n";
  }
  CHECK(code_of([&] { SessionStore store(log); }) == ErrorCode::StoreCorrupt);
}

TEST_CASE("concurrent writers keep every record") {
  SessionStore store;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&store, t] {
      for (int d = 1; d <= 50; ++d) store.record(test_session("p" + std::to_string(t), d, SessionKind::pre_test, d));
    });
  }
  for (auto& th : threads) th.join();
  CHECK(store.size() == 400);
}

TEST_CASE("active progress and passive retention") {
  SessionStore store;
  store.record(test_session("p", 1, SessionKind::pre_test, 40));
  store.record(test_session("p", 1, SessionKind::post_test, 70));
  store.record(passive("p", 1, GloveCondition::functional));
  store.record(test_session("p", 2, SessionKind::pre_test, 65));
  store.record(test_session("p", 2, SessionKind::post_test, 80));

  CHECK(active_progress(store, "p", 1) == 30.0);
  CHECK(passive_retention(store, "p", 1) == -5.0);
  CHECK(active_progress(store, "p", 2) == 15.0);
  CHECK(code_of([&] { passive_retention(store, "p", 2); }) == ErrorCode::MissingTest);
  CHECK(code_of([&] { active_progress(store, "q", 1); }) == ErrorCode::MissingTest);
  CHECK(day_condition(store, "p", 1) == GloveCondition::functional);
  CHECK(day_condition(store, "p", 2) == GloveCondition::none);

  const auto series = progress_series(store, "p");
  REQUIRE(series.size() == 2);
  CHECK(series[0].passive_delta == -5.0);
  CHECK(!series[1].passive_delta.has_value());
}

TEST_CASE("two songs on one day need a song name") {
  SessionStore store;
  store.record(test_session("p", 1, SessionKind::pre_test, 40, "a"));
  store.record(test_session("p", 1, SessionKind::post_test, 50, "a"));
  store.record(test_session("p", 1, SessionKind::pre_test, 10, "b"));
  store.record(test_session("p", 1, SessionKind::post_test, 30, "b"));
  CHECK(code_of([&] { active_progress(store, "p", 1); }) == ErrorCode::BadRequest);
  CHECK(active_progress(store, "p", 1, std::string("b")) == 20.0);
}

TEST_CASE("learning telescopes over days") {
  SessionStore store;
  const std::vector<double> pre{20, 35, 42, 58, 61}, post{40, 50, 66, 70, 88};
  for (int d = 1; d <= 5; ++d) {
    store.record(test_session("p", d, SessionKind::pre_test, pre[static_cast<std::size_t>(d - 1)]));
    store.record(test_session("p", d, SessionKind::post_test, post[static_cast<std::size_t>(d - 1)]));
  }
  double sum = 0;
  for (int d = 1; d <= 5; ++d) sum += active_progress(store, "p", d);
  for (int d = 1; d <= 4; ++d) sum += passive_retention(store, "p", d);
  CHECK(sum == post.back() - pre.front());
}

TEST_CASE("condition groups average per participant") {
  SessionStore store;
  auto day = [&](const std::string& who, int d, double pre, double post, double next_pre, GloveCondition c) {
    store.record(test_session(who, d, SessionKind::pre_test, pre));
    store.record(test_session(who, d, SessionKind::post_test, post));
    store.record(passive(who, d, c));
    store.record(test_session(who, d + 1, SessionKind::pre_test, next_pre));
    store.record(test_session(who, d + 1, SessionKind::post_test, next_pre + 1));
  };
  day("a", 1, 10, 20, 25, GloveCondition::functional);
  day("a", 3, 30, 40, 38, GloveCondition::sham);
  day("b", 1, 10, 20, 18, GloveCondition::sham);
  const auto groups = condition_groups(store, Metric::passive_retention);
  CHECK(groups.at(GloveCondition::functional) == std::vector<double>{5.0});
  auto sham = groups.at(GloveCondition::sham);
  std::sort(sham.begin(), sham.end());
  CHECK(sham == std::vector<double>{-2.0, -2.0});
  CHECK(parse_metric("passive_retention") == Metric::passive_retention);
  CHECK_THROWS_AS(parse_metric("nope"), Error);
}

TEST_CASE("enum text round trips") {
  for (auto k : {SessionKind::pre_test, SessionKind::practice, SessionKind::post_test, SessionKind::passive}) {
    CHECK(parse_session_kind(to_string(k)) == k);
  }
  for (auto c : {GloveCondition::none, GloveCondition::functional, GloveCondition::sham}) {
    CHECK(parse_glove_condition(to_string(c)) == c);
  }
}

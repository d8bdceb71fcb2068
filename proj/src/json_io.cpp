#include "rehearse/json_io.hpp"

#include "rehearse/error.hpp"

using nlohmann::json;

namespace rehearse::midi {

void to_json(json& j, const NoteEvent& ev) {
  j = json{{"pitch", ev.pitch}, {"onset_ms", ev.onset_ms}, {"duration_ms", ev.duration_ms}, {"velocity", ev.velocity}};
  if (ev.hand) j["hand"] = *ev.hand == Hand::left ? "left" : "right";
  if (ev.finger) j["finger"] = *ev.finger;
}

void from_json(const json& j, NoteEvent& ev) {
  ev.pitch = j.at("pitch").get<int>();
  ev.onset_ms = j.at("onset_ms").get<std::int64_t>();
  ev.duration_ms = j.at("duration_ms").get<std::int64_t>();
  ev.velocity = j.value("velocity", 64);
  ev.hand.reset();
  ev.finger.reset();
  if (j.contains("hand")) {
    const auto h = j.at("hand").get<std::string>();
    if (h != "left" && h != "right") throw Error(ErrorCode::BadRequest, "hand must be left or right");
    ev.hand = h == "left" ? Hand::left : Hand::right;
  }
  if (j.contains("finger")) ev.finger = j.at("finger").get<int>();
  if (ev.pitch < 0 || ev.pitch > 127 || ev.duration_ms <= 0 || ev.velocity < 1 || ev.velocity > 127 ||
      ev.onset_ms < 0 || (ev.finger && (*ev.finger < 1 || *ev.finger > 5))) {
    throw Error(ErrorCode::BadRequest, "note event field out of range");
  }
}

void to_json(json& j, const SongScore& song) {
  json tempo = json::array();
  for (const auto& t : song.tempo_map) tempo.push_back({{"tick", t.tick}, {"us_per_quarter", t.us_per_quarter}});
  j = json{{"id", song.id}, {"title", song.title}, {"ppq", song.ppq}, {"tempo_map", tempo}, {"events", song.events}};
}

void from_json(const json& j, SongScore& song) {
  song.id = j.value("id", std::string{});
  song.title = j.value("title", std::string{});
  song.ppq = j.value("ppq", 480);
  song.tempo_map.clear();
  if (j.contains("tempo_map")) {
    for (const auto& t : j.at("tempo_map")) {
      song.tempo_map.push_back({t.at("tick").get<std::int64_t>(), t.at("us_per_quarter").get<std::uint32_t>()});
    }
  }
  if (song.tempo_map.empty()) song.tempo_map.push_back({});
  song.events = j.at("events").get<std::vector<NoteEvent>>();
  sort_events(song.events);
}

void to_json(json& j, const TimedMessage& msg) {
  j = json{{"t", msg.time_ms},
           {"type", msg.kind == MessageKind::note_on ? "on" : "off"},
           {"pitch", msg.pitch},
           {"velocity", msg.velocity}};
}

void from_json(const json& j, TimedMessage& msg) {
  msg.time_ms = j.at("t").get<std::int64_t>();
  const auto type = j.at("type").get<std::string>();
  if (type != "on" && type != "off") throw Error(ErrorCode::BadRequest, "message type must be on or off");
  msg.kind = type == "on" ? MessageKind::note_on : MessageKind::note_off;
  msg.pitch = j.at("pitch").get<int>();
  msg.velocity = j.value("velocity", msg.kind == MessageKind::note_on ? 64 : 0);
  if (msg.pitch < 0 || msg.pitch > 127 || msg.velocity < 0 || msg.velocity > 127) {
    throw Error(ErrorCode::BadRequest, "message field out of range");
  }
}

}  // namespace rehearse::midi

namespace rehearse::perf {

void to_json(json& j, const Token& token) {
  j = json{{"kind", token.kind == TokenKind::note ? "note" : "chord"}, {"pitches", token.pitches}, {"onset_ms", token.onset_ms}};
}

void from_json(const json& j, Token& token) {
  token = Token::from_pitches(j.at("pitches").get<std::vector<int>>(), j.at("onset_ms").get<std::int64_t>());
}

void to_json(json& j, const Performance& p) {
  static constexpr const char* names[] = {"reference", "live", "test"};
  j = json{{"tokens", p.tokens}, {"source", names[static_cast<int>(p.source)]}};
  if (p.session_ref) j["session_ref"] = *p.session_ref;
}

void from_json(const json& j, Performance& p) {
  p.tokens = j.at("tokens").get<std::vector<Token>>();
  const auto src = j.value("source", std::string("live"));
  p.source = src == "reference" ? Source::reference : src == "test" ? Source::test : Source::live;
  p.session_ref.reset();
  if (j.contains("session_ref")) p.session_ref = j.at("session_ref").get<std::uint64_t>();
}

}  // namespace rehearse::perf

namespace rehearse::eval {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::match: return "match";
    case OpKind::substitution: return "substitution";
    case OpKind::deletion: return "deletion";
    case OpKind::insertion: return "insertion";
  }
  return "match";
}

void to_json(json& j, const EvalConfig& c) {
  j = json{{"timing_threshold_ms", c.timing_threshold_ms},
           {"weight_alignment", c.weight_alignment},
           {"weight_timing", c.weight_timing},
           {"chord_window_ms", c.chord_window_ms}};
}

void from_json(const json& j, EvalConfig& c) {
  const EvalConfig d;
  c.timing_threshold_ms = j.value("timing_threshold_ms", d.timing_threshold_ms);
  c.weight_alignment = j.value("weight_alignment", d.weight_alignment);
  c.weight_timing = j.value("weight_timing", d.weight_timing);
  c.chord_window_ms = j.value("chord_window_ms", d.chord_window_ms);
}

void to_json(json& j, const AlignOp& op) {
  j = json{{"op", to_string(op.kind)}, {"cost", op.cost}};
  if (op.ref_idx >= 0) j["ref_idx"] = op.ref_idx;
  if (op.perf_idx >= 0) j["perf_idx"] = op.perf_idx;
}

void from_json(const json& j, AlignOp& op) {
  const auto name = j.at("op").get<std::string>();
  op.kind = name == "match"          ? OpKind::match
            : name == "substitution" ? OpKind::substitution
            : name == "deletion"     ? OpKind::deletion
                                     : OpKind::insertion;
  op.cost = j.at("cost").get<double>();
  op.ref_idx = j.value("ref_idx", -1);
  op.perf_idx = j.value("perf_idx", -1);
}

void to_json(json& j, const AlignmentResult& a) {
  json pairs = json::array();
  for (const auto& p : a.matched_pairs) pairs.push_back({p.t_ref, p.t_perf});
  j = json{{"ops", a.ops},
           {"matched_pairs", pairs},
           {"alignment_cost", a.alignment_cost},
           {"timing_cost", a.timing_cost},
           {"matched_count", a.matched_count},
           {"deletions", a.count(OpKind::deletion)},
           {"insertions", a.count(OpKind::insertion)},
           {"substitutions", a.count(OpKind::substitution)}};
}

void from_json(const json& j, AlignmentResult& a) {
  a.ops = j.at("ops").get<std::vector<AlignOp>>();
  a.matched_pairs.clear();
  for (const auto& p : j.at("matched_pairs")) a.matched_pairs.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<std::int64_t>()});
  a.alignment_cost = j.at("alignment_cost").get<double>();
  a.timing_cost = j.at("timing_cost").get<std::int64_t>();
  a.matched_count = j.at("matched_count").get<int>();
}

void to_json(json& j, const EvalReport& r) {
  j = json{{"alignment", r.alignment},
           {"total_cost", r.total_cost},
           {"score", r.score},
           {"config", r.config},
           {"score_orientation", "higher_is_better"}};
}

void from_json(const json& j, EvalReport& r) {
  r.alignment = j.at("alignment").get<AlignmentResult>();
  r.total_cost = j.at("total_cost").get<double>();
  r.score = j.at("score").get<double>();
  r.config = j.at("config").get<EvalConfig>();
}

}  // namespace rehearse::eval

namespace rehearse::analytics {

void to_json(json& j, const SessionRecord& r) {
  j = json{{"id", r.id},
           {"participant_id", r.participant_id},
           {"day", r.day},
           {"kind", to_string(r.kind)},
           {"song_ref", r.song_ref},
           {"started_at_ms", r.started_at_ms},
           {"ended_at_ms", r.ended_at_ms},
           {"glove_condition", to_string(r.glove_condition)},
           {"complete", r.complete}};
  if (r.performance) j["performance"] = *r.performance;
  if (r.eval) j["eval"] = *r.eval;
}

void from_json(const json& j, SessionRecord& r) {
  r.id = j.value("id", std::uint64_t{0});
  r.participant_id = j.at("participant_id").get<std::string>();
  r.day = j.at("day").get<int>();
  r.kind = parse_session_kind(j.at("kind").get<std::string>());
  r.song_ref = j.value("song_ref", std::string{});
  r.started_at_ms = j.value("started_at_ms", std::int64_t{0});
  r.ended_at_ms = j.value("ended_at_ms", std::int64_t{0});
  r.glove_condition = parse_glove_condition(j.value("glove_condition", std::string("none")));
  r.complete = j.value("complete", true);
  r.performance.reset();
  r.eval.reset();
  if (j.contains("performance")) r.performance = j.at("performance").get<perf::Performance>();
  if (j.contains("eval")) r.eval = j.at("eval").get<eval::EvalReport>();
}

}  // namespace rehearse::analytics

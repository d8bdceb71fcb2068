#include "rehearse/haptic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "rehearse/error.hpp"

namespace rehearse::haptic {

namespace {

constexpr int kMiddleC = 60;

bool event_less(const StimulusEvent& a, const StimulusEvent& b) {
  return std::tie(a.start_ms, a.glove, a.finger) < std::tie(b.start_ms, b.glove, b.finger);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::int64_t to_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedSchedule, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

double to_double(std::string_view s) {
  std::istringstream in{std::string(s)};
  double v = 0;
  if (!(in >> v) || !in.eof()) throw Error(ErrorCode::MalformedSchedule, "bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

midi::SongScore assign_fingers(const midi::SongScore& song) {
  midi::SongScore out = song;
  struct Range {
    int lo = 128, hi = -1;
  };
  Range left, right;
  auto hand_of = [](const midi::NoteEvent& ev) {
    return ev.hand.value_or(ev.pitch < kMiddleC ? Hand::left : Hand::right);
  };
  for (const auto& ev : out.events) {
    if (ev.hand && ev.finger) continue;
    Range& r = hand_of(ev) == Hand::left ? left : right;
    r.lo = std::min(r.lo, ev.pitch);
    r.hi = std::max(r.hi, ev.pitch);
  }
  for (auto& ev : out.events) {
    if (ev.hand && ev.finger) continue;
    const Hand hand = hand_of(ev);
    const Range& r = hand == Hand::left ? left : right;
    const int width = r.hi - r.lo + 1;
    const int band = std::clamp((ev.pitch - r.lo) * kFingersPerHand / width, 0, kFingersPerHand - 1);
    ev.hand = hand;
    ev.finger = hand == Hand::right ? band + 1 : kFingersPerHand - band;
  }
  return out;
}

StimulusSchedule compile_schedule(const midi::SongScore& song, double session_minutes,
                                  const CompileConfig& config, bool sham) {
  if (!(session_minutes > 0)) throw Error(ErrorCode::InvalidConfig, "session length must be positive");
  if (config.max_pulse_ms <= 0 || config.min_gap_ms < 0 || config.loop_gap_ms < 0 ||
      !(config.intensity > 0 && config.intensity <= 1)) {
    throw Error(ErrorCode::InvalidConfig, "bad compile configuration");
  }

  StimulusSchedule sched;
  sched.song_ref = song.id;
  sched.loop_gap_ms = config.loop_gap_ms;
  sched.sham = sham;

  // Chord members that land on the same motor become one pulse.
  std::map<std::tuple<Hand, int, std::int64_t>, std::int64_t> pulses;
  for (const auto& ev : song.events) {
    if (!ev.hand || !ev.finger || *ev.finger < 1 || *ev.finger > kFingersPerHand) {
      throw Error(ErrorCode::UnfingeredEvent, "note at " + std::to_string(ev.onset_ms) + " ms has no finger");
    }
    const auto dur = std::min(ev.duration_ms, config.max_pulse_ms);
    auto [it, fresh] = pulses.try_emplace({*ev.hand, *ev.finger, ev.onset_ms}, dur);
    if (!fresh) it->second = std::max(it->second, dur);
    sched.span_ms = std::max(sched.span_ms, ev.onset_ms + ev.duration_ms);
  }

  // Map order is (glove, finger, start), so same-motor neighbours are adjacent.
  std::vector<StimulusEvent> events;
  events.reserve(pulses.size());
  for (const auto& [key, dur] : pulses) {
    const auto& [glove, finger, start] = key;
    StimulusEvent ev{glove, finger, start, dur, config.intensity};
    if (!events.empty() && events.back().glove == glove && events.back().finger == finger) {
      auto& prev = events.back();
      const auto latest_end = start - config.min_gap_ms;
      if (prev.end_ms() > latest_end) {
        // Gap cannot be honoured for strikes closer than min_gap; keep the
        // pulse at 1 ms so the motor still never overlaps itself.
        prev.duration_ms = std::max<std::int64_t>(latest_end - prev.start_ms, 1);
      }
    }
    events.push_back(ev);
  }
  std::sort(events.begin(), events.end(), event_less);
  sched.events = std::move(events);

  const auto session_ms = static_cast<std::int64_t>(std::floor(session_minutes * 60000.0));
  const auto period = sched.period_ms();
  sched.repetitions = period > 0 ? session_ms / period : 0;
  if (sched.repetitions < 1) {
    throw Error(ErrorCode::SongLongerThanSession, "song plus loop gap exceeds the session length");
  }
  return sched;
}

StimulusSchedule as_sham(StimulusSchedule schedule) {
  schedule.sham = true;
  return schedule;
}

StimulusSchedule select_glove(const StimulusSchedule& schedule, Hand glove) {
  StimulusSchedule out = schedule;
  std::erase_if(out.events, [glove](const StimulusEvent& ev) { return ev.glove != glove; });
  return out;
}

std::string serialize_schedule(const StimulusSchedule& s) {
  std::ostringstream out;
  out.precision(17);
  out << "# rehearse stimulus schedule v1\n";
  out << "@song_ref " << s.song_ref << '\n';
  out << "@span_ms " << s.span_ms << '\n';
  out << "@loop_gap_ms " << s.loop_gap_ms << '\n';
  out << "@repetitions " << s.repetitions << '\n';
  out << "@sham " << (s.sham ? 1 : 0) << '\n';
  for (const auto& ev : s.events) {
    out << (ev.glove == Hand::left ? "left" : "right") << ' ' << ev.finger << ' ' << ev.start_ms << ' '
        << ev.duration_ms << ' ' << ev.intensity << '\n';
  }
  return out.str();
}

StimulusSchedule parse_schedule(std::string_view text) {
  StimulusSchedule s;
  bool have_reps = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> f;
    while (!line.empty()) {
      const auto sp = line.find_first_of(" \t");
      f.push_back(line.substr(0, sp));
      line = trim(sp == std::string_view::npos ? std::string_view{} : line.substr(sp));
    }
    if (f.front().front() == '@') {
      const auto key = f.front().substr(1);
      const auto value = f.size() > 1 ? f[1] : std::string_view{};
      if (key == "song_ref") {
        s.song_ref = std::string(value);
      } else if (key == "span_ms") {
        s.span_ms = to_int(value);
      } else if (key == "loop_gap_ms") {
        s.loop_gap_ms = to_int(value);
      } else if (key == "repetitions") {
        s.repetitions = to_int(value);
        have_reps = true;
      } else if (key == "sham") {
        s.sham = to_int(value) != 0;
      }
      continue;
    }
    if (f.size() != 5) throw Error(ErrorCode::MalformedSchedule, "event line needs 5 fields");
    StimulusEvent ev;
    if (f[0] == "left") {
      ev.glove = Hand::left;
    } else if (f[0] == "right") {
      ev.glove = Hand::right;
    } else {
      throw Error(ErrorCode::MalformedSchedule, "glove must be left or right");
    }
    ev.finger = static_cast<int>(to_int(f[1]));
    ev.start_ms = to_int(f[2]);
    ev.duration_ms = to_int(f[3]);
    ev.intensity = to_double(f[4]);
    if (ev.finger < 1 || ev.finger > kFingersPerHand || ev.start_ms < 0 || ev.duration_ms <= 0 ||
        !(ev.intensity > 0 && ev.intensity <= 1)) {
      throw Error(ErrorCode::MalformedSchedule, "event field out of range");
    }
    s.events.push_back(ev);
  }
  if (!have_reps || s.repetitions < 1 || s.span_ms < 0 || s.loop_gap_ms < 0) {
    throw Error(ErrorCode::MalformedSchedule, "missing or invalid header");
  }
  std::stable_sort(s.events.begin(), s.events.end(), event_less);
  return s;
}

}  // namespace rehearse::haptic

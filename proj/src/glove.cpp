#include "rehearse/glove.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rehearse::glove {

namespace {

constexpr std::int64_t kUsPerMs = 1000;

void refresh_motors(GloveState& s, std::vector<MotorEdge>* edges) {
  const auto& track = *s.schedule;
  for (int f = 1; f <= haptic::kFingersPerHand; ++f) {
    const auto slot = static_cast<std::size_t>(f - 1);
    auto id = track.active_pulse(f, s.position_us);
    // A SYNC correction may move the clock back over a finished pulse.
    if (id && *id <= s.last_pulse[slot] && s.active[slot] != id) id.reset();
    if (id != s.active[slot]) {
      const bool drive = !track.schedule().sham;
      if (s.active[slot] && edges && drive) edges->push_back({s.glove, f, s.position_us, false});
      if (id) {
        if (edges && drive) edges->push_back({s.glove, f, s.position_us, true});
        s.last_pulse[slot] = *id;
      }
      s.active[slot] = id;
    }
    s.motor_levels[slot] = (id && !track.schedule().sham) ? track.pulse(f, *id).intensity : 0.0;
  }
}

void halt(GloveState& s, std::vector<MotorEdge>* edges) {
  const bool drive = s.schedule && !s.schedule->schedule().sham;
  for (int f = 1; f <= haptic::kFingersPerHand; ++f) {
    const auto slot = static_cast<std::size_t>(f - 1);
    if (s.active[slot] && edges && drive) edges->push_back({s.glove, f, s.position_us, false});
    s.active[slot].reset();
    s.motor_levels[slot] = 0.0;
  }
  s.playback = Playback::idle;
  s.hold_us = 0;
}

void reset_playback(GloveState& s) {
  s.active = {};
  s.motor_levels = {};
  s.last_pulse.fill(-1);
  s.completed = false;
}

std::int64_t read_position(std::span<const std::uint8_t> payload) {
  if (payload.size() < 8) return 0;
  PayloadReader in(payload);
  return static_cast<std::int64_t>(in.u64());
}

}  // namespace

PlaybackTrack::PlaybackTrack(haptic::StimulusSchedule schedule, Hand glove)
    : schedule_(std::move(schedule)),
      glove_(glove),
      period_us_(schedule_.period_ms() * kUsPerMs),
      end_us_(period_us_ > 0 ? schedule_.playback_ms() * kUsPerMs : 0) {
  for (const auto& ev : schedule_.events) {
    if (ev.glove == glove_) by_finger_[static_cast<std::size_t>(ev.finger - 1)].push_back(ev);
  }
  for (auto& list : by_finger_) {
    std::sort(list.begin(), list.end(),
              [](const auto& a, const auto& b) { return a.start_ms < b.start_ms; });
  }
}

std::optional<std::int64_t> PlaybackTrack::active_pulse(int finger, std::int64_t position_us) const {
  if (position_us < 0 || position_us >= end_us_) return std::nullopt;
  const auto& list = by_finger_[static_cast<std::size_t>(finger - 1)];
  if (list.empty()) return std::nullopt;
  const std::int64_t rep = position_us / period_us_;
  const std::int64_t local = position_us % period_us_;
  auto it = std::upper_bound(list.begin(), list.end(), local,
                             [](std::int64_t t, const auto& ev) { return t < ev.start_ms * kUsPerMs; });
  if (it == list.begin()) return std::nullopt;
  --it;
  if (local >= it->end_ms() * kUsPerMs) return std::nullopt;
  return rep * static_cast<std::int64_t>(list.size()) + (it - list.begin());
}

const haptic::StimulusEvent& PlaybackTrack::pulse(int finger, std::int64_t encoded) const {
  const auto& list = by_finger_[static_cast<std::size_t>(finger - 1)];
  return list[static_cast<std::size_t>(encoded % static_cast<std::int64_t>(list.size()))];
}

std::int64_t PlaybackTrack::until_next_change(std::int64_t position_us) const {
  if (position_us >= end_us_) return 0;
  const std::int64_t local = position_us % period_us_;
  std::int64_t best = std::min(end_us_ - position_us, period_us_ - local);
  for (const auto& list : by_finger_) {
    auto it = std::upper_bound(list.begin(), list.end(), local,
                               [](std::int64_t t, const auto& ev) { return t < ev.start_ms * kUsPerMs; });
    if (it != list.begin()) {
      const auto end = std::prev(it)->end_ms() * kUsPerMs;
      if (local < end) best = std::min(best, end - local);
    }
    if (it != list.end()) best = std::min(best, it->start_ms * kUsPerMs - local);
  }
  return std::max<std::int64_t>(best, 1);
}

GloveState GloveState::make(Role role) {
  GloveState s;
  s.role = role;
  s.glove = role == Role::master ? Hand::right : Hand::left;
  return s;
}

void GloveState::set_battery_pct(double pct) {
  battery_units = std::llround(std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(kBatteryCapacity));
}

std::vector<std::uint8_t> encode_status(const StatusReport& r) {
  const auto centi = static_cast<std::uint16_t>(std::clamp(std::llround(r.battery_pct * 100.0), 0LL, 10000LL));
  return PayloadWriter{}
      .u8(static_cast<std::uint8_t>(r.code))
      .u16(centi)
      .u8(static_cast<std::uint8_t>(r.playback))
      .u32(r.position_ms)
      .u16(r.missing_chunks)
      .take();
}

StatusReport decode_status(std::span<const std::uint8_t> payload) {
  PayloadReader in(payload);
  StatusReport r;
  r.code = static_cast<StatusCode>(in.u8());
  r.battery_pct = in.u16() / 100.0;
  r.playback = static_cast<Playback>(in.u8());
  r.position_ms = in.u32();
  r.missing_chunks = in.u16();
  return r;
}

CommandOutcome apply_command(const GloveState& state, const Frame& frame) {
  CommandOutcome out{state, std::nullopt, {}, std::nullopt};
  GloveState& s = out.state;

  auto reply = [&](StatusCode code, std::uint16_t missing = 0) {
    StatusReport r{code, s.battery_pct(), s.playback,
                   static_cast<std::uint32_t>(s.position_us / kUsPerMs), missing};
    out.reply = Frame{MsgType::Status, s.seq_to_host++, encode_status(r)};
    return out;
  };
  auto fail = [&](ErrorCode err, StatusCode code, std::uint16_t missing = 0) {
    out.error = err;
    return reply(code, missing);
  };

  switch (frame.type) {
    case MsgType::SchedChunk: {
      if (s.playback == Playback::playing) return fail(ErrorCode::DeviceBusy, StatusCode::busy);
      if (frame.payload.size() < 4) return fail(ErrorCode::MalformedSchedule, StatusCode::bad_schedule);
      PayloadReader in(frame.payload);
      const auto index = in.u16();
      const auto count = in.u16();
      if (count == 0 || index >= count) return fail(ErrorCode::MalformedSchedule, StatusCode::bad_schedule);
      if (count != s.expected_chunks) {
        s.chunks.clear();
        s.expected_chunks = count;
      }
      const auto data = in.rest();
      s.chunks[index].assign(data.begin(), data.end());
      return out;
    }
    case MsgType::SchedCommit: {
      if (s.playback == Playback::playing) return fail(ErrorCode::DeviceBusy, StatusCode::busy);
      PayloadReader in(frame.payload);
      const auto count = frame.payload.size() >= 4 ? in.u16() : std::uint16_t{0};
      const auto blob_crc = frame.payload.size() >= 4 ? in.u16() : std::uint16_t{0};
      if (s.chunks.empty()) return fail(ErrorCode::CommitWithoutChunks, StatusCode::missing_chunks, count);
      std::uint16_t missing = count;
      if (count == s.expected_chunks) {
        missing = static_cast<std::uint16_t>(count - s.chunks.size());
      }
      if (missing > 0) return reply(StatusCode::missing_chunks, missing);

      std::vector<std::uint8_t> blob;
      for (const auto& [idx, data] : s.chunks) blob.insert(blob.end(), data.begin(), data.end());
      s.chunks.clear();
      s.expected_chunks = 0;
      if (crc16_ccitt_false(blob) != blob_crc) {
        return fail(ErrorCode::MalformedSchedule, StatusCode::bad_schedule);
      }
      haptic::StimulusSchedule schedule;
      try {
        schedule = haptic::parse_schedule(std::string_view(reinterpret_cast<const char*>(blob.data()), blob.size()));
      } catch (const Error& e) {
        return fail(e.code(), StatusCode::bad_schedule);
      }
      s.schedule = std::make_shared<const PlaybackTrack>(schedule, s.glove);
      s.position_us = 0;
      reset_playback(s);
      if (s.role == Role::master) {
        out.to_peer = upload_frames(haptic::select_glove(schedule, Hand::left), s.seq_to_peer);
      }
      return reply(StatusCode::ok);
    }
    case MsgType::Start: {
      if (!s.schedule) {
        out.state = state;
        out.error = ErrorCode::StartWithoutSchedule;
        StatusReport r{StatusCode::no_schedule, state.battery_pct(), state.playback,
                       static_cast<std::uint32_t>(state.position_us / kUsPerMs), 0};
        out.reply = Frame{MsgType::Status, state.seq_to_host, encode_status(r)};
        return out;
      }
      if (s.battery_units < kPlayDrainPerUs) return reply(StatusCode::battery_empty);
      if (s.playback != Playback::playing) {
        reset_playback(s);
        s.position_us = std::min(read_position(frame.payload), s.schedule->end_us());
        s.playback = Playback::playing;
        if (s.role == Role::master) s.hold_us = s.link_latency_us;
      }
      if (s.role == Role::master) out.to_peer.push_back(make_start(s.seq_to_peer++, s.position_us));
      return reply(StatusCode::ok);
    }
    case MsgType::Stop: {
      halt(s, nullptr);
      if (s.role == Role::master) out.to_peer.push_back(make_simple(MsgType::Stop, s.seq_to_peer++));
      return reply(StatusCode::ok);
    }
    case MsgType::StatusReq:
      return reply(StatusCode::ok);
    case MsgType::Status:
      return out;
    case MsgType::Sync: {
      if (s.role != Role::slave || s.playback != Playback::playing || !s.schedule) return out;
      const auto target = std::min(read_position(frame.payload) + s.link_latency_us, s.schedule->end_us());
      const double diff_ms = static_cast<double>(target - s.position_us) / kUsPerMs;
      s.clock_offset_ms = std::llround(diff_ms);
      s.position_us = target;
      return out;
    }
  }
  return out;
}

GloveState tick(const GloveState& state, microseconds dt, std::vector<MotorEdge>* edges) {
  GloveState s = state;
  std::int64_t remaining = dt.count();
  while (remaining > 0) {
    if (s.playback != Playback::playing || !s.schedule) {
      s.battery_units -= std::min(s.battery_units, remaining * kIdleDrainPerUs);
      break;
    }
    if (s.hold_us > 0) {
      const auto h = std::min(remaining, s.hold_us);
      s.battery_units -= std::min(s.battery_units, h * kIdleDrainPerUs);
      s.hold_us -= h;
      remaining -= h;
      continue;
    }
    refresh_motors(s, edges);
    const auto& track = *s.schedule;
    const std::int64_t step = std::min({remaining, track.until_next_change(s.position_us),
                                        track.end_us() - s.position_us, s.battery_units / kPlayDrainPerUs});
    if (step <= 0) {
      if (s.position_us >= track.end_us()) {
        s.completed = true;
      } else {
        s.battery_units = 0;
      }
      halt(s, edges);
      continue;
    }
    s.position_us += step;
    s.battery_units -= step * kPlayDrainPerUs;
    remaining -= step;
    refresh_motors(s, edges);
    if (s.position_us >= track.end_us()) {
      s.completed = true;
      halt(s, edges);
    } else if (s.battery_units < kPlayDrainPerUs) {
      s.battery_units = 0;
      halt(s, edges);
    }
  }
  return s;
}

std::optional<microseconds> next_change(const GloveState& state) {
  if (state.playback != Playback::playing || !state.schedule) return std::nullopt;
  if (state.hold_us > 0) return microseconds(state.hold_us);
  const auto& track = *state.schedule;
  const auto t = std::min({track.until_next_change(state.position_us), track.end_us() - state.position_us,
                           std::max<std::int64_t>(state.battery_units / kPlayDrainPerUs, 1)});
  return microseconds(std::max<std::int64_t>(t, 1));
}

std::vector<Frame> upload_frames(const haptic::StimulusSchedule& schedule, std::uint8_t& seq) {
  const std::string text = haptic::serialize_schedule(schedule);
  const std::span<const std::uint8_t> blob(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
  const std::size_t count = std::max<std::size_t>(1, (blob.size() + kChunkData - 1) / kChunkData);
  if (count > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::PayloadTooLarge, "schedule needs more than 65535 chunks");
  }
  std::vector<Frame> frames;
  frames.reserve(count + 1);
  for (std::size_t i = 0; i < count; ++i) {
    const auto part = blob.subspan(i * kChunkData, std::min(kChunkData, blob.size() - i * kChunkData));
    frames.push_back({MsgType::SchedChunk, seq++,
                      PayloadWriter{}.u16(static_cast<std::uint16_t>(i)).u16(static_cast<std::uint16_t>(count)).bytes(part).take()});
  }
  frames.push_back({MsgType::SchedCommit, seq++,
                    PayloadWriter{}.u16(static_cast<std::uint16_t>(count)).u16(crc16_ccitt_false(blob)).take()});
  return frames;
}

Frame make_start(std::uint8_t seq, std::int64_t position_us) {
  return {MsgType::Start, seq, PayloadWriter{}.u64(static_cast<std::uint64_t>(position_us)).take()};
}

Frame make_sync(std::uint8_t seq, std::int64_t position_us) {
  return {MsgType::Sync, seq, PayloadWriter{}.u64(static_cast<std::uint64_t>(position_us)).take()};
}

Frame make_simple(MsgType type, std::uint8_t seq) { return {type, seq, {}}; }

}  // namespace rehearse::glove

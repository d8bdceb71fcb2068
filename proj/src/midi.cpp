#include "rehearse/midi.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <tuple>

#include "rehearse/error.hpp"

namespace rehearse::midi {

namespace {

constexpr std::uint32_t kDefaultTempo = 500000;

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, ErrorCode on_overrun)
      : bytes_(bytes), on_overrun_(on_overrun) {}

  bool done() const { return pos_ >= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint8_t peek() {
    need(1);
    return bytes_[pos_];
  }
  std::uint32_t be(int width) {
    need(static_cast<std::size_t>(width));
    std::uint32_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if ((b & 0x80) == 0) return v;
    }
    throw Error(on_overrun_, "variable-length quantity longer than 4 bytes");
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(on_overrun_, "unexpected end of data");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  ErrorCode on_overrun_;
};

struct RawNote {
  int pitch;
  int velocity;
  std::int64_t on_tick;
  std::int64_t off_tick;
};

// Open note-ons keyed by (channel, pitch); the back of each vector is the
// most recent strike.
using OpenNotes = std::map<std::pair<int, int>, std::vector<std::pair<std::int64_t, int>>>;

void parse_track(std::span<const std::uint8_t> data, std::vector<RawNote>& notes,
                 std::vector<TempoChange>& tempos, std::string& title, bool want_title,
                 ParseDiagnostics& diag) {
  ByteReader in(data, ErrorCode::MalformedTrack);
  OpenNotes open;
  std::int64_t tick = 0;
  std::uint8_t running = 0;

  while (!in.done()) {
    tick += in.vlq();
    std::uint8_t status = in.peek();
    if (status & 0x80) {
      in.u8();
    } else {
      if (running == 0) throw Error(ErrorCode::MalformedTrack, "data byte without running status");
      status = running;
    }

    if (status == 0xFF) {
      running = 0;
      const std::uint8_t type = in.u8();
      const auto payload = in.take(in.vlq());
      if (type == 0x2F) break;
      if (type == 0x51 && payload.size() == 3) {
        const std::uint32_t us = (std::uint32_t{payload[0]} << 16) |
                                 (std::uint32_t{payload[1]} << 8) | payload[2];
        if (us > 0) tempos.push_back({tick, us});
      } else if (type == 0x03 && want_title && title.empty()) {
        title.assign(payload.begin(), payload.end());
      }
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      running = 0;
      in.take(in.vlq());
      continue;
    }
    if (status >= 0xF0) throw Error(ErrorCode::MalformedTrack, "unexpected system message in file");

    running = status;
    const int kind = status & 0xF0;
    const int channel = status & 0x0F;
    const int data_len = (kind == 0xC0 || kind == 0xD0) ? 1 : 2;
    const std::uint8_t d1 = in.u8() & 0x7F;
    const std::uint8_t d2 = data_len == 2 ? (in.u8() & 0x7F) : 0;

    const bool is_on = kind == 0x90 && d2 > 0;
    const bool is_off = kind == 0x80 || (kind == 0x90 && d2 == 0);
    if (is_on) {
      open[{channel, d1}].emplace_back(tick, d2);
    } else if (is_off) {
      auto it = open.find({channel, d1});
      if (it == open.end() || it->second.empty()) {
        ++diag.orphan_note_offs;
        continue;
      }
      const auto [on_tick, vel] = it->second.back();
      it->second.pop_back();
      notes.push_back({d1, vel, on_tick, tick});
    }
  }

  for (auto& [key, stack] : open) {
    for (const auto& [on_tick, vel] : stack) {
      notes.push_back({key.second, vel, on_tick, tick});
      ++diag.unterminated_notes;
    }
  }
}

std::vector<TempoChange> normalize_tempo_map(std::vector<TempoChange> tempos) {
  std::stable_sort(tempos.begin(), tempos.end(),
                   [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
  std::vector<TempoChange> out;
  for (const auto& t : tempos) {
    if (!out.empty() && out.back().tick == t.tick) {
      out.back() = t;  // last change at a tick wins
    } else {
      out.push_back(t);
    }
  }
  if (out.empty() || out.front().tick != 0) out.insert(out.begin(), TempoChange{0, kDefaultTempo});
  return out;
}

void put_be(std::vector<std::uint8_t>& out, std::uint32_t v, int width) {
  for (int i = width - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::array<std::uint8_t, 5> buf{};
  int n = 0;
  buf[n++] = v & 0x7F;
  while ((v >>= 7) != 0) buf[n++] = static_cast<std::uint8_t>(0x80 | (v & 0x7F));
  while (n > 0) out.push_back(buf[--n]);
}

}  // namespace

bool event_order(const NoteEvent& a, const NoteEvent& b) {
  return std::tie(a.onset_ms, a.pitch, a.duration_ms) < std::tie(b.onset_ms, b.pitch, b.duration_ms);
}

void sort_events(std::vector<NoteEvent>& events) {
  std::stable_sort(events.begin(), events.end(), event_order);
}

std::int64_t ticks_to_ms(std::int64_t tick, std::span<const TempoChange> tempo_map, int ppq) {
  if (tempo_map.empty()) throw Error(ErrorCode::EmptyTempoMap, "tempo map has no entries");
  if (ppq <= 0) throw Error(ErrorCode::InvalidConfig, "ppq must be positive");
  tick = std::max<std::int64_t>(tick, 0);

  // Sum of (ticks in segment) * (us per quarter); dividing by ppq*1000 gives ms.
  unsigned __int128 acc = 0;
  std::int64_t seg_start = 0;
  std::uint32_t tempo = tempo_map.front().tick == 0 ? tempo_map.front().us_per_quarter : kDefaultTempo;
  for (const auto& change : tempo_map) {
    if (change.tick >= tick) break;
    if (change.tick > seg_start) {
      acc += static_cast<unsigned __int128>(change.tick - seg_start) * tempo;
      seg_start = change.tick;
    }
    tempo = change.us_per_quarter;
  }
  acc += static_cast<unsigned __int128>(tick - seg_start) * tempo;

  const auto denom = static_cast<unsigned __int128>(ppq) * 1000;
  return static_cast<std::int64_t>((acc + denom / 2) / denom);
}

ParsedSong parse_smf(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, ErrorCode::MalformedHeader);
  if (bytes.size() < 14) throw Error(ErrorCode::MalformedHeader, "file shorter than header chunk");
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), "MThd")) {
    throw Error(ErrorCode::MalformedHeader, "missing MThd");
  }
  const std::uint32_t header_len = in.be(4);
  if (header_len < 6) throw Error(ErrorCode::MalformedHeader, "header chunk too short");
  const auto format = in.be(2);
  const auto ntracks = in.be(2);
  const auto division = in.be(2);
  in.take(header_len - 6);

  if (format == 2) throw Error(ErrorCode::UnsupportedFormat, "format 2 files are not supported");
  if (format > 2) throw Error(ErrorCode::MalformedHeader, "unknown SMF format");
  if (division & 0x8000) throw Error(ErrorCode::UnsupportedFormat, "SMPTE time division");
  if (division == 0) throw Error(ErrorCode::MalformedHeader, "zero ticks per quarter");

  ParsedSong result;
  auto& song = result.song;
  song.ppq = static_cast<int>(division);

  std::vector<RawNote> raw;
  std::vector<TempoChange> tempos;
  std::uint32_t tracks_seen = 0;
  while (in.remaining() >= 8) {
    const auto id = in.take(4);
    const std::uint32_t len = in.be(4);
    if (len > in.remaining()) throw Error(ErrorCode::MalformedTrack, "chunk length exceeds file");
    const auto data = in.take(len);
    if (!std::equal(id.begin(), id.end(), "MTrk")) {
      ++result.diagnostics.skipped_chunks;
      continue;
    }
    parse_track(data, raw, tempos, song.title, tracks_seen == 0, result.diagnostics);
    ++tracks_seen;
  }
  if (ntracks > 0 && tracks_seen == 0) {
    throw Error(ErrorCode::MalformedTrack, "no track chunks found");
  }

  song.tempo_map = normalize_tempo_map(std::move(tempos));
  song.events.reserve(raw.size());
  for (const auto& n : raw) {
    const auto on = ticks_to_ms(n.on_tick, song.tempo_map, song.ppq);
    const auto off = ticks_to_ms(n.off_tick, song.tempo_map, song.ppq);
    NoteEvent ev;
    ev.pitch = n.pitch;
    ev.onset_ms = on;
    ev.duration_ms = std::max<std::int64_t>(off - on, 1);
    ev.velocity = std::clamp(n.velocity, 1, 127);
    song.events.push_back(ev);
  }
  sort_events(song.events);
  song.id = content_id(bytes);
  return result;
}

std::vector<std::uint8_t> write_smf(const SongScore& song) {
  struct Msg {
    std::int64_t tick;
    int order;  // offs before ons at the same tick
    std::uint8_t status, d1, d2;
  };
  std::vector<NoteEvent> events = song.events;
  sort_events(events);

  // Notes overlapping on one pitch go to different channels so that pairing
  // on re-read is unambiguous.
  std::vector<Msg> msgs;
  std::map<int, std::array<std::int64_t, 16>> busy_until;
  for (const auto& ev : events) {
    auto [it, inserted] = busy_until.try_emplace(ev.pitch);
    if (inserted) it->second.fill(-1);
    int channel = 0;
    while (channel < 15 && it->second[channel] > ev.onset_ms) ++channel;
    it->second[channel] = ev.onset_ms + ev.duration_ms;
    const auto p = static_cast<std::uint8_t>(ev.pitch);
    const auto ch = static_cast<std::uint8_t>(channel);
    msgs.push_back({ev.onset_ms, 1, static_cast<std::uint8_t>(0x90 | ch), p,
                    static_cast<std::uint8_t>(std::clamp(ev.velocity, 1, 127))});
    msgs.push_back({ev.onset_ms + ev.duration_ms, 0, static_cast<std::uint8_t>(0x80 | ch), p, 0});
  }
  std::stable_sort(msgs.begin(), msgs.end(), [](const Msg& a, const Msg& b) {
    return std::tie(a.tick, a.order) < std::tie(b.tick, b.order);
  });

  std::vector<std::uint8_t> track;
  if (!song.title.empty()) {
    track.insert(track.end(), {0x00, 0xFF, 0x03});
    put_vlq(track, static_cast<std::uint32_t>(song.title.size()));
    track.insert(track.end(), song.title.begin(), song.title.end());
  }
  track.insert(track.end(), {0x00, 0xFF, 0x51, 0x03, 0x0F, 0x42, 0x40});  // 1 000 000 us
  std::int64_t last = 0;
  for (const auto& m : msgs) {
    put_vlq(track, static_cast<std::uint32_t>(m.tick - last));
    last = m.tick;
    track.insert(track.end(), {m.status, m.d1, m.d2});
  }
  track.insert(track.end(), {0x00, 0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd'};
  put_be(out, 6, 4);
  put_be(out, 0, 2);
  put_be(out, 1, 2);
  put_be(out, 1000, 2);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_be(out, static_cast<std::uint32_t>(track.size()), 4);
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

CaptureResult capture_events(std::span<const TimedMessage> stream) {
  CaptureResult result;
  std::map<int, std::vector<std::pair<std::int64_t, int>>> open;
  std::int64_t last = stream.empty() ? 0 : stream.front().time_ms;
  for (const auto& msg : stream) {
    if (msg.time_ms < last) {
      throw Error(ErrorCode::NonMonotoneTimestamps, "capture timestamps must not decrease");
    }
    last = msg.time_ms;
    const bool is_on = msg.kind == MessageKind::note_on && msg.velocity > 0;
    if (is_on) {
      open[msg.pitch].emplace_back(msg.time_ms, msg.velocity);
      continue;
    }
    auto it = open.find(msg.pitch);
    if (it == open.end() || it->second.empty()) {
      ++result.orphan_note_offs;
      continue;
    }
    const auto [on, vel] = it->second.back();
    it->second.pop_back();
    result.events.push_back({msg.pitch, on, std::max<std::int64_t>(msg.time_ms - on, 1),
                             std::clamp(vel, 1, 127), std::nullopt, std::nullopt});
  }
  for (const auto& [pitch, stack] : open) {
    for (const auto& [on, vel] : stack) {
      result.events.push_back({pitch, on, std::max<std::int64_t>(last - on, 1), std::clamp(vel, 1, 127),
                               std::nullopt, std::nullopt});
      ++result.unterminated_notes;
    }
  }
  sort_events(result.events);
  return result;
}

std::string content_id(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rehearse::midi

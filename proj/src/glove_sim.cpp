#include "rehearse/glove_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rehearse/rng.hpp"

namespace rehearse::glove {

LossyChannel::LossyChannel(double drop_rate, microseconds latency, std::uint64_t seed)
    : drop_rate_(drop_rate), latency_(latency), rng_(splitmix64(seed)) {}

void LossyChannel::send(std::vector<std::uint8_t> bytes, std::int64_t now_us) {
  ++sent_;
  if (drop_rate_ > 0.0 && uniform_unit(rng_) < drop_rate_) {
    ++dropped_;
    return;
  }
  in_flight_.emplace_back(now_us + latency_.count(), std::move(bytes));
}

std::optional<std::int64_t> LossyChannel::next_delivery_us() const {
  if (in_flight_.empty()) return std::nullopt;
  return in_flight_.front().first;
}

std::vector<std::vector<std::uint8_t>> LossyChannel::receive(std::int64_t now_us) {
  std::vector<std::vector<std::uint8_t>> out;
  while (!in_flight_.empty() && in_flight_.front().first <= now_us) {
    out.push_back(std::move(in_flight_.front().second));
    in_flight_.pop_front();
  }
  return out;
}

GlovePair::GlovePair(LinkConfig config)
    : config_(config),
      master_(GloveState::make(Role::master)),
      slave_(GloveState::make(Role::slave)),
      to_slave_(config.drop_rate, config.latency, config.seed * 2 + 1),
      to_master_(config.drop_rate, config.latency, config.seed * 2 + 2),
      skew_ppb_(std::llround(config.slave_skew_ppm * 1000.0)) {
  master_.link_latency_us = config.latency.count();
  slave_.link_latency_us = config.latency.count();
}

HostReply GlovePair::host_command(const Frame& frame) {
  const bool was_playing = master_.playback == Playback::playing;
  auto out = apply_command(master_, frame);
  master_ = std::move(out.state);
  if (!was_playing && master_.playback == Playback::playing) {
    next_sync_us_ = now_us_ + config_.sync_interval.count();
  }
  if (!out.to_peer.empty()) enqueue_batch(std::move(out.to_peer));
  HostReply reply;
  reply.error = out.error;
  if (out.reply) reply.status = decode_status(out.reply->payload);
  return reply;
}

HostReply GlovePair::upload(const haptic::StimulusSchedule& schedule) {
  HostReply last;
  for (const auto& f : upload_frames(schedule, host_seq_)) {
    last = host_command(f);
    if (last.error) return last;
  }
  return last;
}

HostReply GlovePair::start() { return host_command(make_start(host_seq_++)); }
HostReply GlovePair::stop() { return host_command(make_simple(MsgType::Stop, host_seq_++)); }

StatusReport GlovePair::status() {
  return host_command(make_simple(MsgType::StatusReq, host_seq_++)).status.value_or(StatusReport{});
}

void GlovePair::enqueue_batch(std::vector<Frame> frames) {
  outbox_.push_back({std::move(frames), 0, 0});
  if (outbox_.size() == 1) transmit_head();
}

void GlovePair::transmit_head() {
  while (!outbox_.empty() && outbox_.front().attempts >= config_.max_retries) {
    link_failed_ = true;
    outbox_.pop_front();
  }
  if (outbox_.empty()) return;
  auto& batch = outbox_.front();
  if (batch.attempts > 0) ++retransmissions_;
  for (auto& f : batch.frames) {
    if (batch.attempts > 0) f.seq = master_.seq_to_peer++;
    to_slave_.send(encode_frame(f), now_us_);
  }
  ++batch.attempts;
  // Latency is fixed, so any reply to this attempt arrives before the deadline.
  batch.deadline_us = now_us_ + 2 * config_.latency.count() + 50'000;
}

void GlovePair::deliver_to_slave() {
  for (const auto& bytes : to_slave_.receive(now_us_)) {
    Frame frame;
    try {
      frame = decode_frame(bytes);
    } catch (const Error&) {
      continue;
    }
    auto out = apply_command(slave_, frame);
    slave_ = std::move(out.state);
    if (out.reply) to_master_.send(encode_frame(*out.reply), now_us_);
  }
}

void GlovePair::deliver_to_master() {
  for (const auto& bytes : to_master_.receive(now_us_)) {
    Frame frame;
    try {
      frame = decode_frame(bytes);
    } catch (const Error&) {
      continue;
    }
    if (frame.type != MsgType::Status || outbox_.empty()) continue;
    if (decode_status(frame.payload).code == StatusCode::ok) {
      outbox_.pop_front();
    }
    transmit_head();
  }
}

std::int64_t GlovePair::slave_local(std::int64_t global_us) const {
  const __int128 extra = static_cast<__int128>(global_us) * skew_ppb_ / 1'000'000'000;
  return global_us + static_cast<std::int64_t>(extra);
}

void GlovePair::step_to(std::int64_t target_us) {
  const std::int64_t dt = target_us - now_us_;
  std::vector<MotorEdge> edges;

  const auto master_from = master_.position_us;
  const auto held = std::min(dt, master_.hold_us);
  master_ = tick(master_, microseconds(dt), &edges);
  for (const auto& e : edges) trace_.push_back({now_us_ + held + (e.position_us - master_from), e});

  edges.clear();
  const auto slave_from = slave_.position_us;
  const std::int64_t local_dt = slave_local(target_us) - slave_local(now_us_);
  if (local_dt > 0) slave_ = tick(slave_, microseconds(local_dt), &edges);
  for (const auto& e : edges) {
    const double scale = 1e9 / (1e9 + static_cast<double>(skew_ppb_));
    trace_.push_back({now_us_ + std::llround(static_cast<double>(e.position_us - slave_from) * scale), e});
  }

  now_us_ = target_us;
  if (master_.playback == Playback::playing && slave_.playback == Playback::playing) {
    max_divergence_us_ = std::max(max_divergence_us_, std::abs(master_.position_us - slave_.position_us));
  }
}

void GlovePair::advance(microseconds dt) {
  const std::int64_t target = now_us_ + dt.count();
  while (now_us_ < target) {
    std::int64_t next = target;
    auto consider = [&](std::optional<std::int64_t> t) {
      if (t) next = std::clamp(*t, now_us_, next);
    };
    consider(to_slave_.next_delivery_us());
    consider(to_master_.next_delivery_us());
    if (!outbox_.empty()) consider(outbox_.front().deadline_us);
    if (master_.playback == Playback::playing) consider(next_sync_us_);

    if (next > now_us_) step_to(next);

    deliver_to_slave();
    deliver_to_master();
    if (!outbox_.empty() && now_us_ >= outbox_.front().deadline_us) transmit_head();
    if (master_.playback == Playback::playing && now_us_ >= next_sync_us_) {
      to_slave_.send(encode_frame(make_sync(master_.seq_to_peer++, master_.position_us)), now_us_);
      next_sync_us_ = now_us_ + config_.sync_interval.count();
    }
  }
}

void GlovePair::run_until_idle(microseconds limit) {
  const std::int64_t stop_at = now_us_ + limit.count();
  const std::int64_t slice = config_.sync_interval.count();
  while (now_us_ < stop_at) {
    const bool busy = master_.playback == Playback::playing || slave_.playback == Playback::playing ||
                      !outbox_.empty() || to_slave_.next_delivery_us() || to_master_.next_delivery_us();
    if (!busy) break;
    advance(microseconds(std::min(slice, stop_at - now_us_)));
  }
}

std::vector<Activation> activations(const std::vector<TraceEntry>& trace, Hand glove,
                                    std::optional<std::int64_t> close_at_us) {
  std::vector<Activation> out;
  std::map<int, std::int64_t> open;
  for (const auto& t : trace) {
    if (t.edge.glove != glove) continue;
    if (t.edge.on) {
      open[t.edge.finger] = t.edge.position_us;
    } else if (auto it = open.find(t.edge.finger); it != open.end()) {
      out.push_back({glove, t.edge.finger, it->second, t.edge.position_us});
      open.erase(it);
    }
  }
  if (close_at_us) {
    for (const auto& [finger, start] : open) out.push_back({glove, finger, start, *close_at_us});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Activation> expected_activations(const haptic::StimulusSchedule& schedule, Hand glove) {
  std::vector<Activation> out;
  const std::int64_t period = schedule.period_ms();
  for (std::int64_t rep = 0; rep < schedule.repetitions; ++rep) {
    for (const auto& ev : schedule.events) {
      if (ev.glove != glove) continue;
      const std::int64_t start = (rep * period + ev.start_ms) * 1000;
      out.push_back({glove, ev.finger, start, start + ev.duration_ms * 1000});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rehearse::glove

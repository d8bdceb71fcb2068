#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "rehearse/glove.hpp"

namespace rehearse::glove {

struct LinkConfig {
  double drop_rate = 0.0;
  microseconds latency{20'000};
  std::uint64_t seed = 1;
  double slave_skew_ppm = 0.0;
  microseconds sync_interval{10'000'000};
  int max_retries = 64;
};

/// One direction of the inter-glove link: fixed latency, independent drops.
class LossyChannel {
 public:
  LossyChannel(double drop_rate, microseconds latency, std::uint64_t seed);

  void send(std::vector<std::uint8_t> bytes, std::int64_t now_us);
  std::optional<std::int64_t> next_delivery_us() const;
  std::vector<std::vector<std::uint8_t>> receive(std::int64_t now_us);

  std::int64_t sent() const { return sent_; }
  std::int64_t dropped() const { return dropped_; }

 private:
  double drop_rate_;
  microseconds latency_;
  std::mt19937_64 rng_;
  std::deque<std::pair<std::int64_t, std::vector<std::uint8_t>>> in_flight_;
  std::int64_t sent_ = 0;
  std::int64_t dropped_ = 0;
};

struct TraceEntry {
  std::int64_t sim_us = 0;
  MotorEdge edge;
};

/// A motor pulse reconstructed from on/off edges, in playback coordinates.
struct Activation {
  Hand glove = Hand::right;
  int finger = 1;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;

  friend bool operator==(const Activation&, const Activation&) = default;
  friend auto operator<=>(const Activation&, const Activation&) = default;
};

struct HostReply {
  std::optional<StatusReport> status;
  std::optional<ErrorCode> error;
};

/// Right glove (master) and left glove (slave) driven in simulated time.
/// The host talks to the master directly; glove-to-glove traffic goes
/// through a pair of LossyChannels. Fully deterministic for a given config.
class GlovePair {
 public:
  explicit GlovePair(LinkConfig config = {});

  HostReply host_command(const Frame& frame);
  HostReply upload(const haptic::StimulusSchedule& schedule);
  HostReply start();
  HostReply stop();
  StatusReport status();

  void advance(microseconds dt);
  /// Advances until both gloves are idle, the link is quiet, or `limit` passes.
  void run_until_idle(microseconds limit);

  const GloveState& master() const { return master_; }
  const GloveState& slave() const { return slave_; }
  GloveState& mutable_master() { return master_; }
  GloveState& mutable_slave() { return slave_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  std::int64_t now_us() const { return now_us_; }
  double max_divergence_ms() const { return static_cast<double>(max_divergence_us_) / 1000.0; }
  bool link_failed() const { return link_failed_; }
  int retransmissions() const { return retransmissions_; }
  const LossyChannel& to_slave() const { return to_slave_; }

 private:
  struct Batch {
    std::vector<Frame> frames;
    std::int64_t deadline_us = 0;
    int attempts = 0;
  };

  void enqueue_batch(std::vector<Frame> frames);
  void transmit_head();
  void deliver_to_slave();
  void deliver_to_master();
  std::int64_t slave_local(std::int64_t global_us) const;
  void step_to(std::int64_t target_us);

  LinkConfig config_;
  GloveState master_;
  GloveState slave_;
  LossyChannel to_slave_;
  LossyChannel to_master_;
  std::deque<Batch> outbox_;
  std::vector<TraceEntry> trace_;
  std::int64_t now_us_ = 0;
  std::int64_t next_sync_us_ = 0;
  std::int64_t max_divergence_us_ = 0;
  std::int64_t skew_ppb_ = 0;
  std::uint8_t host_seq_ = 0;
  bool link_failed_ = false;
  int retransmissions_ = 0;
};

/// Pairs on/off edges of one glove into pulses; an unterminated pulse is
/// closed at `close_at_us`.
std::vector<Activation> activations(const std::vector<TraceEntry>& trace, Hand glove,
                                    std::optional<std::int64_t> close_at_us = std::nullopt);

/// The pulses a full playback of `schedule` should produce on `glove`.
std::vector<Activation> expected_activations(const haptic::StimulusSchedule& schedule, Hand glove);

}  // namespace rehearse::glove

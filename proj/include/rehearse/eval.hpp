#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rehearse/midi.hpp"
#include "rehearse/perf.hpp"

namespace rehearse::eval {

struct EvalConfig {
  std::int64_t timing_threshold_ms = 100;
  double weight_alignment = 1.0;
  double weight_timing = 0.5;
  std::int64_t chord_window_ms = perf::kDefaultChordWindowMs;

  /// Throws InvalidConfig unless T > 0, weights >= 0 with a positive sum,
  /// and the chord window is positive.
  void validate() const;

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

enum class OpKind { match, substitution, deletion, insertion };

/// One edit step. Deletions have no perf index; insertions have no ref index.
struct AlignOp {
  OpKind kind = OpKind::match;
  int ref_idx = -1;
  int perf_idx = -1;
  double cost = 0.0;

  friend bool operator==(const AlignOp&, const AlignOp&) = default;
};

struct MatchedPair {
  std::int64_t t_ref = 0;
  std::int64_t t_perf = 0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct AlignmentResult {
  std::vector<AlignOp> ops;
  std::vector<MatchedPair> matched_pairs;
  double alignment_cost = 0.0;
  std::int64_t timing_cost = 0;
  int matched_count = 0;

  int count(OpKind kind) const;

  friend bool operator==(const AlignmentResult&, const AlignmentResult&) = default;
};

struct EvalReport {
  AlignmentResult alignment;
  double total_cost = 0.0;
  double score = 100.0;
  EvalConfig config;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline constexpr double kDeletionCost = 1.0;
inline constexpr double kInsertionCost = 1.0;

/// Cost of aligning two tokens on the diagonal: 0 for identical pitch sets,
/// otherwise |A xor B| / |A union B| (1 for two different single notes).
double substitution_cost(const perf::Token& a, const perf::Token& b);

/// Needleman-Wunsch global alignment with unit gaps. Ties in traceback prefer
/// match/substitution, then deletion, then insertion. timing_cost is left 0.
AlignmentResult align(std::span<const perf::Token> ref, std::span<const perf::Token> perf);

/// Number of matched pairs whose onset difference is at least `threshold_ms`.
std::int64_t timing_cost(const AlignmentResult& alignment, std::int64_t threshold_ms);

double total_cost(double alignment_cost, std::int64_t timing_cost, const EvalConfig& config);

/// 100 * max(0, 1 - total / ((W_a + W_t) * ref_length)).
double normalized_score(double total_cost, std::size_t ref_length, const EvalConfig& config);

/// align + timing_cost + total_cost + normalized_score over prepared tokens.
/// `perf` must already be rebased onto the reference timebase.
EvalReport evaluate(std::span<const perf::Token> ref, std::span<const perf::Token> perf,
                    const EvalConfig& config);

/// Full scoring pipeline from note events: chord extraction on both sides,
/// rebase of the performance, then evaluate(). Throws EmptyPerformance when
/// `performed` is empty.
EvalReport score_events(std::span<const midi::NoteEvent> reference,
                        std::span<const midi::NoteEvent> performed, const EvalConfig& config);

}  // namespace rehearse::eval

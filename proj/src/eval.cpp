#include "rehearse/eval.hpp"

#include <algorithm>
#include <cmath>

#include "rehearse/error.hpp"

namespace rehearse::eval {

namespace {

// Traceback ties are decided on sums of fractional costs.
constexpr double kTieEps = 1e-9;

bool same(double a, double b) { return std::abs(a - b) <= kTieEps; }

}  // namespace

void EvalConfig::validate() const {
  if (timing_threshold_ms <= 0) throw Error(ErrorCode::InvalidConfig, "timing threshold must be positive");
  if (!(weight_alignment >= 0.0) || !(weight_timing >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "weights must be non-negative");
  }
  if (!(weight_alignment + weight_timing > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "weights must not both be zero");
  }
  if (chord_window_ms <= 0) throw Error(ErrorCode::InvalidConfig, "chord window must be positive");
}

int AlignmentResult::count(OpKind kind) const {
  return static_cast<int>(std::count_if(ops.begin(), ops.end(), [kind](const AlignOp& op) { return op.kind == kind; }));
}

double substitution_cost(const perf::Token& a, const perf::Token& b) {
  // pitches are sorted and unique, so a merge walk counts intersection size.
  std::size_t common = 0;
  auto i = a.pitches.begin();
  auto j = b.pitches.begin();
  while (i != a.pitches.end() && j != b.pitches.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.pitches.size() + b.pitches.size() - common;
  if (uni == 0) return 0.0;
  const std::size_t sym = uni - common;
  return static_cast<double>(sym) / static_cast<double>(uni);
}

AlignmentResult align(std::span<const perf::Token> ref, std::span<const perf::Token> perf) {
  const std::size_t n = ref.size();
  const std::size_t m = perf.size();
  const std::size_t cols = m + 1;
  std::vector<double> dp((n + 1) * cols);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return dp[i * cols + j]; };

  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<double>(i) * kDeletionCost;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<double>(j) * kInsertionCost;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const double diag = at(i - 1, j - 1) + substitution_cost(ref[i - 1], perf[j - 1]);
      const double del = at(i - 1, j) + kDeletionCost;
      const double ins = at(i, j - 1) + kInsertionCost;
      at(i, j) = std::min({diag, del, ins});
    }
  }

  AlignmentResult result;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const double here = at(i, j);
    if (i > 0 && j > 0) {
      const double sub = substitution_cost(ref[i - 1], perf[j - 1]);
      if (same(here, at(i - 1, j - 1) + sub)) {
        const auto kind = sub == 0.0 ? OpKind::match : OpKind::substitution;
        result.ops.push_back({kind, static_cast<int>(i - 1), static_cast<int>(j - 1), sub});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && same(here, at(i - 1, j) + kDeletionCost)) {
      result.ops.push_back({OpKind::deletion, static_cast<int>(i - 1), -1, kDeletionCost});
      --i;
      continue;
    }
    result.ops.push_back({OpKind::insertion, -1, static_cast<int>(j - 1), kInsertionCost});
    --j;
  }
  std::reverse(result.ops.begin(), result.ops.end());

  for (const auto& op : result.ops) {
    result.alignment_cost += op.cost;
    if (op.kind == OpKind::match) {
      result.matched_pairs.push_back({ref[op.ref_idx].onset_ms, perf[op.perf_idx].onset_ms});
    }
  }
  result.matched_count = static_cast<int>(result.matched_pairs.size());
  return result;
}

std::int64_t timing_cost(const AlignmentResult& alignment, std::int64_t threshold_ms) {
  return std::count_if(alignment.matched_pairs.begin(), alignment.matched_pairs.end(),
                       [threshold_ms](const MatchedPair& p) {
                         const auto delta = p.t_ref > p.t_perf ? p.t_ref - p.t_perf : p.t_perf - p.t_ref;
                         return delta >= threshold_ms;
                       });
}

double total_cost(double alignment_cost, std::int64_t timing_cost, const EvalConfig& config) {
  return config.weight_alignment * alignment_cost + config.weight_timing * static_cast<double>(timing_cost);
}

double normalized_score(double total_cost, std::size_t ref_length, const EvalConfig& config) {
  if (ref_length == 0) throw Error(ErrorCode::ZeroLengthReference, "reference has no tokens");
  const double len = static_cast<double>(ref_length);
  const double worst = config.weight_alignment * len + config.weight_timing * len;
  return 100.0 * std::max(0.0, 1.0 - total_cost / worst);
}

EvalReport evaluate(std::span<const perf::Token> ref, std::span<const perf::Token> perf,
                    const EvalConfig& config) {
  config.validate();
  EvalReport report;
  report.config = config;
  report.alignment = align(ref, perf);
  report.alignment.timing_cost = timing_cost(report.alignment, config.timing_threshold_ms);
  report.total_cost = total_cost(report.alignment.alignment_cost, report.alignment.timing_cost, config);
  report.score = normalized_score(report.total_cost, ref.size(), config);
  return report;
}

EvalReport score_events(std::span<const midi::NoteEvent> reference,
                        std::span<const midi::NoteEvent> performed, const EvalConfig& config) {
  config.validate();
  if (reference.empty()) throw Error(ErrorCode::ZeroLengthReference, "reference song has no notes");
  if (performed.empty()) throw Error(ErrorCode::EmptyPerformance, "performance has no notes");
  perf::Performance ref{perf::extract_chords(reference, config.chord_window_ms), perf::Source::reference, {}};
  perf::Performance live{perf::extract_chords(performed, config.chord_window_ms), perf::Source::live, {}};
  live = perf::rebase_times(live, ref);
  return evaluate(ref.tokens, live.tokens, config);
}

}  // namespace rehearse::eval

#pragma once

// Independent reference computations used only by tests. Nothing here may
// call into the code paths it is used to check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <vector>

namespace oracle {

/// Milliseconds for `tick` by walking every tick individually and adding
/// that tick's duration in microseconds.
inline double tick_walk_ms(std::int64_t tick, const std::vector<std::pair<std::int64_t, std::uint32_t>>& tempo,
                           int ppq) {
  double us = 0.0;
  for (std::int64_t t = 0; t < tick; ++t) {
    std::uint32_t current = 500000;
    for (const auto& [at, val] : tempo) {
      if (at <= t) current = val;
    }
    us += static_cast<double>(current) / ppq;
  }
  return us / 1000.0;
}

using PitchSet = std::set<int>;

inline double set_distance(const PitchSet& a, const PitchSet& b) {
  std::vector<int> sym, uni;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(sym));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  return uni.empty() ? 0.0 : static_cast<double>(sym.size()) / static_cast<double>(uni.size());
}

/// Minimum cost over every global alignment, found by walking every path of
/// match/substitute, delete, insert moves to the end of both sequences.
inline double brute_force_alignment_cost(const std::vector<PitchSet>& ref, const std::vector<PitchSet>& perf) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    if (i == ref.size() && j == perf.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i < ref.size() && j < perf.size()) walk(i + 1, j + 1, acc + set_distance(ref[i], perf[j]));
    if (i < ref.size()) walk(i + 1, j, acc + 1.0);
    if (j < perf.size()) walk(i, j + 1, acc + 1.0);
  };
  walk(0, 0, 0.0);
  return best;
}

/// Exact two-sided permutation p by listing every subset of size |a| with a
/// bitmask over the pooled values.
inline double enumerate_permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  auto mean_diff = [&](std::uint32_t mask) {
    double sa = 0, sb = 0;
    int na = 0, nb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sa += pooled[i];
        ++na;
      } else {
        sb += pooled[i];
        ++nb;
      }
    }
    return sa / na - sb / nb;
  };
  std::uint32_t observed_mask = (1u << a.size()) - 1;
  const double obs = std::abs(mean_diff(observed_mask));
  int hits = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
    ++total;
    if (std::abs(mean_diff(mask)) >= obs - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / total;
}

}  // namespace oracle

#include "rehearse/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "rehearse/error.hpp"
#include "rehearse/kernels.hpp"

namespace rehearse::stats {

namespace {

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::int64_t exact_exceed(std::span<const double> pooled, std::size_t n_a, double observed_abs) {
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const double threshold = observed_abs - 1e-9 * std::max(1.0, observed_abs);
  const std::size_t n = pooled.size();
  const double n_b = static_cast<double>(n - n_a);

  std::vector<std::size_t> idx(n_a);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::int64_t hits = 0;
  while (true) {
    double sum_a = 0.0;
    for (auto i : idx) sum_a += pooled[i];
    const double diff = sum_a / static_cast<double>(n_a) - (total - sum_a) / n_b;
    if (std::abs(diff) >= threshold) ++hits;

    // next k-combination in lexicographic order
    std::size_t k = n_a;
    while (k > 0 && idx[k - 1] == n - n_a + k - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < n_a; ++j) idx[j] = idx[j - 1] + 1;
  }
  return hits;
}

}  // namespace

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   const PermutationOptions& options) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyGroup, "permutation test needs two non-empty groups");

  // Pool in a label-independent order so swapping a and b gives the same draws.
  const bool swap = std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  const auto first = swap ? b : a;
  const auto second = swap ? a : b;
  std::vector<double> pooled(first.begin(), first.end());
  pooled.insert(pooled.end(), second.begin(), second.end());

  PermutationResult result;
  result.observed_diff = mean(a) - mean(b);
  const double observed_abs = std::abs(mean(first) - mean(second));
  const auto combos = binomial(pooled.size(), first.size());

  const bool exact = options.method == PermutationMethod::exact ||
                     (options.method == PermutationMethod::automatic && combos <= kExactLimit);
  if (exact) {
    result.exact = true;
    result.relabelings = static_cast<std::int64_t>(combos);
    result.p_value = static_cast<double>(exact_exceed(pooled, first.size(), observed_abs)) / static_cast<double>(combos);
    return result;
  }
  if (options.iterations <= 0) throw Error(ErrorCode::InvalidConfig, "Monte Carlo needs iterations > 0");
  const auto hits = options.parallel
                        ? kernels::permutation_exceed_parallel(pooled, first.size(), observed_abs, options.iterations, options.seed)
                        : kernels::permutation_exceed_serial(pooled, first.size(), observed_abs, options.iterations, options.seed);
  result.relabelings = options.iterations;
  result.p_value = static_cast<double>(hits + 1) / static_cast<double>(options.iterations + 1);
  return result;
}

AnovaResult anova_f(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(ErrorCode::DegenerateGroups, "ANOVA needs at least two groups");
  std::size_t n_total = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorCode::DegenerateGroups, "each group needs at least two values");
    n_total += g.size();
  }
  const std::size_t k = groups.size();
  if (n_total <= k) throw Error(ErrorCode::DegenerateGroups, "not enough observations");

  double grand = 0.0;
  for (const auto& g : groups) grand += std::accumulate(g.begin(), g.end(), 0.0);
  grand /= static_cast<double>(n_total);

  AnovaResult r;
  for (const auto& g : groups) {
    const double m = mean(g);
    r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) r.ss_within += (x - m) * (x - m);
  }
  r.df_between = static_cast<int>(k - 1);
  r.df_within = static_cast<int>(n_total - k);
  const double ms_between = r.ss_between / r.df_between;
  const double ms_within = r.ss_within / r.df_within;

  if (ms_within == 0.0) {
    r.f = ms_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.p_value = ms_between > 0.0 ? 0.0 : 1.0;
    return r;
  }
  r.f = ms_between / ms_within;
  const boost::math::fisher_f_distribution<double> dist(r.df_between, r.df_within);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.f));
  return r;
}

}  // namespace rehearse::stats

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rehearse::stats {

enum class PermutationMethod { automatic, exact, monte_carlo };

inline constexpr std::uint64_t kExactLimit = 20'000;

struct PermutationOptions {
  std::int64_t iterations = 10'000;
  std::uint64_t seed = 0;
  PermutationMethod method = PermutationMethod::automatic;
  bool parallel = true;
};

struct PermutationResult {
  double p_value = 1.0;
  double observed_diff = 0.0;  // mean(a) - mean(b)
  bool exact = false;
  std::int64_t relabelings = 0;
};

/// Two-sided permutation test on the difference of means. `automatic`
/// enumerates every relabeling when there are at most kExactLimit of them,
/// otherwise runs seeded Monte Carlo with p = (hits + 1) / (iterations + 1).
PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   const PermutationOptions& options = {});

struct AnovaResult {
  double f = 0.0;
  double p_value = 1.0;
  int df_between = 0;
  int df_within = 0;
  double ss_between = 0.0;
  double ss_within = 0.0;
};

/// One-way ANOVA. F is +infinity when groups differ but have no spread.
AnovaResult anova_f(const std::vector<std::vector<double>>& groups);

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

}  // namespace rehearse::stats

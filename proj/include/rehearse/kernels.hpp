#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rehearse/eval.hpp"

// Data-parallel kernels. Each has a serial reference that the OpenMP version
// must reproduce bit for bit; iteration i always draws from its own RNG
// stream, so results do not depend on the thread count.

namespace rehearse::kernels {

/// Monte Carlo label shuffles of `pooled` into a group of size `n_a` and the
/// rest. Counts shuffles whose |mean difference| reaches `observed_abs`
/// (less a tie tolerance).
std::int64_t permutation_exceed_serial(std::span<const double> pooled, std::size_t n_a, double observed_abs,
                                       std::int64_t iterations, std::uint64_t seed);
std::int64_t permutation_exceed_parallel(std::span<const double> pooled, std::size_t n_a, double observed_abs,
                                         std::int64_t iterations, std::uint64_t seed);

struct ScoreJob {
  std::span<const perf::Token> reference;
  std::span<const perf::Token> performance;
};

std::vector<eval::EvalReport> evaluate_batch_serial(std::span<const ScoreJob> jobs, const eval::EvalConfig& config);
std::vector<eval::EvalReport> evaluate_batch_parallel(std::span<const ScoreJob> jobs, const eval::EvalConfig& config);

/// Threads the parallel kernels will use (1 when built without OpenMP).
int max_threads();

}  // namespace rehearse::kernels

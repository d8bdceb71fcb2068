#include "rehearse/kernels.hpp"

#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rehearse/error.hpp"
#include "rehearse/rng.hpp"

namespace rehearse::kernels {

namespace {

double tie_tolerance(double observed_abs) { return 1e-9 * std::max(1.0, observed_abs); }

// One shuffle: partial Fisher-Yates picks group A from a fresh copy of pooled.
bool shuffle_exceeds(std::span<const double> pooled, std::vector<double>& scratch, std::size_t n_a,
                     double total, double threshold, std::uint64_t seed, std::int64_t iteration) {
  scratch.assign(pooled.begin(), pooled.end());
  auto eng = stream_engine(seed, static_cast<std::uint64_t>(iteration));
  const std::size_t n = scratch.size();
  double sum_a = 0.0;
  for (std::size_t k = 0; k < n_a; ++k) {
    const auto j = k + static_cast<std::size_t>(uniform_below(eng, n - k));
    std::swap(scratch[k], scratch[j]);
    sum_a += scratch[k];
  }
  const double n_b = static_cast<double>(n - n_a);
  const double diff = sum_a / static_cast<double>(n_a) - (total - sum_a) / n_b;
  return std::abs(diff) >= threshold;
}

}  // namespace

std::int64_t permutation_exceed_serial(std::span<const double> pooled, std::size_t n_a, double observed_abs,
                                       std::int64_t iterations, std::uint64_t seed) {
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const double threshold = observed_abs - tie_tolerance(observed_abs);
  std::vector<double> scratch;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < iterations; ++i) {
    count += shuffle_exceeds(pooled, scratch, n_a, total, threshold, seed, i) ? 1 : 0;
  }
  return count;
}

std::int64_t permutation_exceed_parallel(std::span<const double> pooled, std::size_t n_a, double observed_abs,
                                         std::int64_t iterations, std::uint64_t seed) {
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const double threshold = observed_abs - tie_tolerance(observed_abs);
  std::int64_t count = 0;
#pragma omp parallel reduction(+ : count)
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < iterations; ++i) {
      count += shuffle_exceeds(pooled, scratch, n_a, total, threshold, seed, i) ? 1 : 0;
    }
  }
  return count;
}

std::vector<eval::EvalReport> evaluate_batch_serial(std::span<const ScoreJob> jobs, const eval::EvalConfig& config) {
  std::vector<eval::EvalReport> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(eval::evaluate(job.reference, job.performance, config));
  return out;
}

std::vector<eval::EvalReport> evaluate_batch_parallel(std::span<const ScoreJob> jobs, const eval::EvalConfig& config) {
  // Exceptions must not escape the parallel region, so reject bad jobs first.
  config.validate();
  for (const auto& job : jobs) {
    if (job.reference.empty()) throw Error(ErrorCode::ZeroLengthReference, "batch job without reference tokens");
  }
  std::vector<eval::EvalReport> out(jobs.size());
  const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& job = jobs[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = eval::evaluate(job.reference, job.performance, config);
  }
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace rehearse::kernels

#include <chrono>
#include <cstdio>
#include <random>

#include "rehearse/kernels.hpp"

using namespace rehearse;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double best_ms(F&& f, int reps = 3) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s %10.2f %10.2f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const double scale = argc > 1 ? std::atof(argv[1]) : 1.0;
  std::mt19937_64 rng(12345);
  std::printf("threads: %d\n", kernels::max_threads());
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  std::vector<double> pooled(64);
  for (auto& x : pooled) x = std::normal_distribution<double>(0, 10)(rng);
  const auto iters = static_cast<std::int64_t>(400'000 * scale);
  std::int64_t hs = 0, hp = 0;
  const double ps = best_ms([&] { hs = kernels::permutation_exceed_serial(pooled, 32, 2.0, iters, 7); });
  const double pp = best_ms([&] { hp = kernels::permutation_exceed_parallel(pooled, 32, 2.0, iters, 7); });
  row("permutation (n=64)", ps, pp, hs == hp);

  std::vector<std::vector<perf::Token>> refs, perfs;
  const auto jobs_n = static_cast<std::size_t>(256 * scale) + 1;
  for (std::size_t i = 0; i < jobs_n; ++i) {
    std::vector<perf::Token> r, p;
    std::int64_t t = 0;
    for (int k = 0; k < 300; ++k) {
      const int pitch = 48 + static_cast<int>(rng() % 36);
      t += 200 + static_cast<std::int64_t>(rng() % 300);
      r.push_back(perf::Token::note(pitch, t));
      if (rng() % 10) p.push_back(perf::Token::note(rng() % 8 ? pitch : pitch + 1, t + static_cast<std::int64_t>(rng() % 160)));
    }
    refs.push_back(std::move(r));
    perfs.push_back(std::move(p));
  }
  std::vector<kernels::ScoreJob> jobs;
  for (std::size_t i = 0; i < refs.size(); ++i) jobs.push_back({refs[i], perfs[i]});
  const eval::EvalConfig cfg;
  std::vector<eval::EvalReport> rs, rp;
  const double es = best_ms([&] { rs = kernels::evaluate_batch_serial(jobs, cfg); });
  const double ep = best_ms([&] { rp = kernels::evaluate_batch_parallel(jobs, cfg); });
  row("batch evaluation (300 notes)", es, ep, rs == rp);
  return hs == hp && rs == rp ? 0 : 1;
}

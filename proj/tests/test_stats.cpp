#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rehearse/error.hpp"
#include "rehearse/stats.hpp"

using namespace rehearse;
using namespace rehearse::stats;

namespace {

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = std::round(d(rng) * 100.0) / 10.0;
  return v;
}

}  // namespace

TEST_CASE("exact permutation example") {
  const std::vector<double> a{1, 2}, b{10, 11};
  const auto r = permutation_test(a, b);
  CHECK(r.exact);
  CHECK(r.relabelings == 6);
  CHECK(r.p_value == doctest::Approx(1.0 / 3.0));
  CHECK(r.observed_diff == -9.0);
}

TEST_CASE("identical groups give p = 1") {
  const std::vector<double> a{3, 3, 3}, b{3, 3, 3};
  CHECK(permutation_test(a, b).p_value == 1.0);
}

TEST_CASE("exact enumeration matches a bitmask oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const auto na = 1 + rng() % 6, nb = 1 + rng() % 6;
    const auto a = random_values(rng, na), b = random_values(rng, nb);
    const auto r = permutation_test(a, b, {0, 0, PermutationMethod::exact, false});
    CHECK(r.p_value == doctest::Approx(oracle::enumerate_permutation_p(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("p value is symmetric in group labels") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_values(rng, 1 + rng() % 7), b = random_values(rng, 1 + rng() % 7);
    for (auto method : {PermutationMethod::exact, PermutationMethod::monte_carlo}) {
      const PermutationOptions opt{2000, 9, method, true};
      CHECK(permutation_test(a, b, opt).p_value == permutation_test(b, a, opt).p_value);
    }
  }
}

TEST_CASE("Monte Carlo agrees with exact within 0.02") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_values(rng, 4 + rng() % 5), b = random_values(rng, 4 + rng() % 5);
    const auto exact = permutation_test(a, b, {0, 0, PermutationMethod::exact, true});
    const auto mc = permutation_test(a, b, {20000, static_cast<std::uint64_t>(trial), PermutationMethod::monte_carlo, true});
    CHECK_FALSE(mc.exact);
    CHECK(std::abs(mc.p_value - exact.p_value) <= 0.02);
  }
}

TEST_CASE("Monte Carlo is seeded and thread-count independent") {
  std::mt19937_64 rng(45);
  const auto a = random_values(rng, 30), b = random_values(rng, 30);
  const PermutationOptions par{5000, 7, PermutationMethod::automatic, true};
  const PermutationOptions ser{5000, 7, PermutationMethod::automatic, false};
  const auto p1 = permutation_test(a, b, par);
  CHECK_FALSE(p1.exact);
  CHECK(p1.p_value == permutation_test(a, b, par).p_value);
  CHECK(p1.p_value == permutation_test(a, b, ser).p_value);
  CHECK(p1.p_value > 0.0);
}

TEST_CASE("permutation errors") {
  const std::vector<double> a{1.0}, empty;
  CHECK_THROWS_AS(permutation_test(a, empty), Error);
  CHECK_THROWS_AS(permutation_test(empty, a), Error);
  CHECK_THROWS_AS(permutation_test(a, a, {0, 0, PermutationMethod::monte_carlo, true}), Error);
}

TEST_CASE("one-way ANOVA example") {
  const auto r = anova_f({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
  CHECK(r.f == doctest::Approx(3.0));
  CHECK(r.df_between == 2);
  CHECK(r.df_within == 6);
  CHECK(r.ss_between == doctest::Approx(6.0));
  CHECK(r.ss_within == doctest::Approx(6.0));
  CHECK(r.p_value == doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("two-group F equals squared pooled t") {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_values(rng, 2 + rng() % 8), b = random_values(rng, 2 + rng() % 8);
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    auto ss = [&](const std::vector<double>& v) {
      double s = 0, m = mean(v);
      for (double x : v) s += (x - m) * (x - m);
      return s;
    };
    const double na = a.size(), nb = b.size();
    const double sp2 = (ss(a) + ss(b)) / (na + nb - 2);
    if (sp2 == 0) continue;
    const double t = (mean(a) - mean(b)) / std::sqrt(sp2 * (1 / na + 1 / nb));
    CHECK(anova_f({a, b}).f == doctest::Approx(t * t).epsilon(1e-9));
  }
}

TEST_CASE("ANOVA degenerate cases") {
  CHECK_THROWS_AS(anova_f({{1, 2}}), Error);
  CHECK_THROWS_AS(anova_f({{1, 2}, {3}}), Error);
  const auto spread_free = anova_f({{1, 1}, {2, 2}});
  CHECK(std::isinf(spread_free.f));
  CHECK(spread_free.p_value == 0.0);
  const auto flat = anova_f({{1, 1}, {1, 1}});
  CHECK(flat.f == 0.0);
  CHECK(flat.p_value == 1.0);
}

TEST_CASE("binomial") {
  CHECK(binomial(4, 2) == 6);
  CHECK(binomial(16, 8) == 12870);
  CHECK(binomial(5, 7) == 0);
  CHECK(binomial(200, 100) == UINT64_MAX);
}

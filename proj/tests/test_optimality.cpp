#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ibp/optimality.hpp"

using namespace ibp;

TEST_CASE("pinned increment constant matches the measured sweep") {
  double measured = estimate_increment_constant(2);
  CHECK(measured <= kIncrementConstantNu2);
  CHECK(kIncrementConstantNu2 - measured <= 0.05);
}

TEST_CASE("child-average deviation decays geometrically") {
  double prev = max_child_average_difference(2, 1);
  for (int j = 2; j <= 12; ++j) {
    double d = max_child_average_difference(2, j);
    double ratio = d / prev;
    CHECK(ratio > 0.35);
    CHECK(ratio < 0.65);
    prev = d;
  }
}

TEST_CASE("gauge restrictiveness screen") {
  CHECK(gauge_restrictive_enough(GaugeFunction::power_log(1.0, 1.0)));
  CHECK(gauge_restrictive_enough(GaugeFunction::power_log(1.0, 2.0)));
  std::string why;
  CHECK_FALSE(gauge_restrictive_enough(GaugeFunction::power(0.5), &why));
  CHECK_FALSE(why.empty());
}

TEST_CASE("generator rejects inadmissible gauges") {
  CHECK_THROWS_AS(generate_optimality_coefficients(GaugeFunction::power(0.5), 2, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_optimality_coefficients(GaugeFunction::power(1.0), 2, 100),
                  std::invalid_argument);
}

static const OptimalityRun& reference_run() {
  static OptimalityRun run =
      generate_optimality_coefficients(GaugeFunction::power_log(1.0, 1.0), 2, 2000);
  return run;
}

TEST_CASE("generated blocks satisfy their defining rules") {
  const OptimalityRun& run = reference_run();
  REQUIRE_FALSE(run.blocks.empty());
  CHECK(run.c0 > 0.0);
  CHECK_THAT(run.c, Catch::Matchers::WithinAbs(2.0 / std::numbers::pi, 1e-15));
  MartingaleState s = run.state();
  int prevN = 0;
  size_t ti = 0;
  for (const OptimalityBlock& blk : run.blocks) {
    if (blk.skipped) {
      CHECK(std::pow(2.0, -prevN) <= blk.t_l);
      continue;
    }
    // Depth threshold brackets t_l.
    CHECK(std::pow(2.0, -blk.Ntilde) <= blk.t_l);
    CHECK(std::pow(2.0, -(blk.Ntilde - 1)) > blk.t_l);
    CHECK(blk.Nprime >= blk.Ntilde);
    CHECK(blk.N_l >= blk.Nprime);
    // Within the block: spacing m0 + l, magnitudes in [2^{-l}, 2^{-l+1}].
    int spacing = run.m0 + blk.l;
    int prev_tau = prevN;
    while (ti < s.tau.size() && s.tau[ti] <= blk.N_l) {
      int n = s.tau[ti];
      CHECK((n - prevN) % spacing == 0);
      if (prev_tau > prevN) CHECK(n - prev_tau == spacing);
      double m = std::abs(s.coeff(n));
      CHECK(m >= std::pow(2.0, -blk.l) - 1e-15);
      CHECK(m <= std::pow(2.0, 1.0 - blk.l) + 1e-15);
      prev_tau = n;
      ++ti;
    }
    // k_l is the integer part of the restricted variance at N_l.
    double sb2 = sigma_bar2_closed_form(s, blk.N_l);
    CHECK_THAT(sb2, Catch::Matchers::WithinRel(blk.sigma_bar2, 1e-10));
    CHECK(blk.k_l == static_cast<long>(std::floor(sb2)));
    prevN = blk.N_l;
  }
}

TEST_CASE("variance-per-depth lower bound holds for every block") {
  const OptimalityRun& run = reference_run();
  for (const OptimalityBlock& blk : run.blocks) {
    if (blk.skipped) continue;
    double lower = run.c0 * run.c0 * std::pow(2.0, -2.0 * blk.l) /
                   (2.0 * (run.m0 + blk.l + 1)) * blk.N_l;
    CHECK(static_cast<double>(blk.k_l) >= lower);
  }
}

TEST_CASE("gauge value at the crossing depths stays below the variance budget") {
  const OptimalityRun& run = reference_run();
  GaugeFunction g = GaugeFunction::power_log(1.0, 1.0);
  MartingaleState s = run.state();
  int l = run.blocks.front().l;
  for (long k = 3; k <= std::min(12L, run.blocks.back().k_l); ++k) {
    int nb = n_bar(s, static_cast<double>(k), static_cast<int>(run.a.size()) - 1);
    REQUIRE(nb > 0);
    double lhs = std::log(g.psi(std::pow(2.0, -nb)));
    double rhs = 2.0 * (run.m0 + l + 1) * std::pow(2.0, -l) * static_cast<double>(k) /
                 (run.c0 * run.c0) * std::log(2.0);
    CHECK(lhs <= rhs);
  }
}

static MartingaleState small_random_state(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.0, 1.0);
  std::vector<Complex> a(9, Complex(0, 0));
  for (int n = 1; n <= 8; ++n)
    if (z(rng) > 0.3) a[n] = 0.6 * Complex(u(rng), u(rng));
  return MartingaleState::make(2, a);
}

TEST_CASE("survivor estimator reproduces exact pruning below the population cap") {
  for (unsigned seed : {4u, 8u}) {
    MartingaleState s = small_random_state(seed);
    SurvivorReport exact = survivor_measure(s, 0.8, 8);
    SurvivorEstimate est = estimate_survivor_measure(s, 0.8, 8, 1);
    REQUIRE(est.measure_by_level.size() == 8);
    for (int n = 1; n <= 8; ++n) {
      double want = to_double(exact.levels[n - 1].measure);
      CHECK_THAT(est.measure_by_level[n - 1], Catch::Matchers::WithinAbs(want, 1e-9));
    }
  }
}

TEST_CASE("survivor estimator is deterministic and monotone") {
  MartingaleState s = reference_run().state();
  SurvivorEstimate a = estimate_survivor_measure(s, 1.0, 40, 2024, 1L << 10);
  SurvivorEstimate b = estimate_survivor_measure(s, 1.0, 40, 2024, 1L << 10);
  REQUIRE(a.measure_by_level.size() == b.measure_by_level.size());
  for (size_t i = 0; i < a.measure_by_level.size(); ++i)
    CHECK(a.measure_by_level[i] == b.measure_by_level[i]);
  for (size_t i = 1; i < a.measure_by_level.size(); ++i)
    CHECK(a.measure_by_level[i] <= a.measure_by_level[i - 1]);
}

TEST_CASE("increment bound dominates enumerated increments") {
  MartingaleState s = small_random_state(11);
  SurvivorEstimate est = estimate_survivor_measure(s, 1e9, 8, 1);
  double worst = 0.0;
  for (int n = 1; n <= 8; ++n) {
    long cn = level_arc_count(2, n);
    for (long i = 0; i < cn; ++i) {
      NuAdicArc arc(2, n, mpz_class(i));
      Complex d = martingale_value(s, n, arc) - martingale_value(s, n - 1, arc.parent());
      worst = std::max(worst, std::abs(d));
    }
  }
  CHECK(est.max_increment_bound >= worst - 1e-12);
  CHECK(est.max_increment_bound <= 10.0 * std::max(worst, 1e-3));
}

TEST_CASE("log-linear regression recovers an exact line") {
  std::vector<double> x = {1, 2, 3, 4, 5}, ly;
  for (double v : x) ly.push_back(-0.7 * v + 2.0);
  RegressionFit f = fit_log_linear(x, ly);
  CHECK_THAT(f.slope, Catch::Matchers::WithinAbs(-0.7, 1e-12));
  CHECK_THAT(f.intercept, Catch::Matchers::WithinAbs(2.0, 1e-12));
  CHECK_THAT(f.r2, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THROWS(fit_log_linear({1.0}, {1.0}));
}

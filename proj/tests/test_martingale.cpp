#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ibp/martingale.hpp"

using namespace ibp;

TEST_CASE("arc average of z") {
  CHECK(arc_average_z(Arc(0.0, 1.0)) == Complex(0, 0));
  CHECK_THAT(std::abs(arc_average_z(Arc(0.0, 0.5))),
             Catch::Matchers::WithinAbs(2.0 / std::numbers::pi, 1e-14));
  CHECK_THAT(std::abs(arc_average_z(Arc(0.0, 0.25))),
             Catch::Matchers::WithinAbs(2.0 * std::sqrt(2.0) / std::numbers::pi, 1e-14));
  // Exact-arc version agrees with the endpoint formula.
  ExactArc e(Rational(1, 3), Rational(1, 5));
  Complex a = exact_arc_average_z(e);
  Complex b = arc_average_z(e.to_arc());
  CHECK_THAT(std::abs(a - b), Catch::Matchers::WithinAbs(0.0, 1e-14));
}

TEST_CASE("nu-adic arcs are exact") {
  NuAdicArc arc(2, 3, mpz_class(5));
  ExactArc e = arc.to_exact();
  CHECK(e.start == Rational(5, 16));
  CHECK(e.length == Rational(1, 16));
  CHECK(arc.child(1).index == 11);
  CHECK(arc.child(1).parent().index == arc.index);
  // Image under z^{2^2}: [5/16, 6/16] maps onto [1/4, 1/2], the level-1 arc
  // with index 5 mod 4 = 1.
  NuAdicArc im = arc.image(2);
  CHECK(im.level == 1);
  CHECK(im.index == 1);
  CHECK_THROWS(NuAdicArc(2, 1, mpz_class(4)));
}

TEST_CASE("monomial turn dynamics are exact at depth") {
  // frac(2^100 / 3) cycles with period 2: 2^100 = 1 mod 3.
  Rational t(1, 3);
  CHECK(monomial_iterate_turn(2, 100, t) == Rational(1, 3));
  CHECK(monomial_iterate_turn(2, 101, t) == Rational(2, 3));
  CHECK(monomial_image_measure(2, 3, Rational(1, 32)) == Rational(1, 4));
  CHECK(monomial_image_measure(2, 3, Rational(1, 4)) == 1);
  CHECK(monomial_image_measure(2, 10000, Rational(1, 7)) == 1);
}

static MartingaleState single_coeff_state() {
  return MartingaleState::make(2, {Complex(0, 0), Complex(1, 0)});
}

TEST_CASE("martingale values: single-coefficient closed form") {
  MartingaleState s = single_coeff_state();
  CHECK(martingale_value(s, 0, NuAdicArc(2, 0, mpz_class(0))) == Complex(0, 0));
  Complex m1 = martingale_value(s, 1, NuAdicArc(2, 1, mpz_class(0)));
  CHECK_THAT(std::abs(m1), Catch::Matchers::WithinAbs(2.0 / std::numbers::pi, 1e-14));
  // sigma(1)^2 = (2/pi)^2 both by enumeration and closed form.
  VarianceReport v = variance(s, 1);
  CHECK_THAT(v.sigma2,
             Catch::Matchers::WithinAbs(std::pow(2.0 / std::numbers::pi, 2.0), 1e-12));
  CHECK_THAT(sigma2_closed_form(s, 1), Catch::Matchers::WithinRel(v.sigma2, 1e-12));
}

static MartingaleState random_state(int nu, int horizon, unsigned seed,
                                    double zero_prob = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.0, 1.0);
  std::vector<Complex> a(horizon + 1, Complex(0, 0));
  for (int n = 1; n <= horizon; ++n)
    if (z(rng) > zero_prob) a[n] = 0.7 * Complex(u(rng), u(rng));
  return MartingaleState::make(nu, a);
}

TEST_CASE("martingale property: parent is the mean of its children") {
  for (unsigned seed : {1u, 2u}) {
    MartingaleState s = random_state(2, 8, seed);
    for (int n = 1; n <= 7; ++n) {
      long cn = level_arc_count(2, n - 1);
      for (long i = 0; i < cn; ++i) {
        NuAdicArc par(2, n - 1, mpz_class(i));
        Complex mean(0, 0);
        for (int c = 0; c < 2; ++c)
          mean += martingale_value(s, n, par.child(c));
        mean /= 2.0;
        Complex pv = martingale_value(s, n - 1, par);
        CHECK_THAT(std::abs(mean - pv), Catch::Matchers::WithinAbs(0.0, 1e-12));
      }
    }
  }
}

TEST_CASE("pythagoras and closed-form variance") {
  MartingaleState s = random_state(2, 10, 77);
  VarianceReport v = variance(s, 10);
  CHECK(std::abs(v.sigma2 - v.increments_sum) <= 1e-9 * v.sigma2);
  CHECK_THAT(sigma2_closed_form(s, 10), Catch::Matchers::WithinRel(v.sigma2, 1e-10));
  CHECK_THAT(sigma_bar2_closed_form(s, 10), Catch::Matchers::WithinRel(v.sigma_bar2, 1e-10));

  MartingaleState s3 = random_state(3, 7, 5);
  VarianceReport v3 = variance(s3, 7);
  CHECK(std::abs(v3.sigma2 - v3.increments_sum) <= 1e-9 * v3.sigma2);
  CHECK_THAT(sigma2_closed_form(s3, 7), Catch::Matchers::WithinRel(v3.sigma2, 1e-10));
}

TEST_CASE("zero schedule gives zero variance; full tau gives sigma_bar = sigma") {
  MartingaleState z = MartingaleState::make(2, std::vector<Complex>(9, Complex(0, 0)));
  CHECK(sigma2_closed_form(z, 8) == 0.0);
  MartingaleState full = random_state(2, 9, 13, /*zero_prob=*/0.0);
  CHECK(static_cast<int>(full.tau.size()) == 9);
  CHECK_THAT(sigma_bar2_closed_form(full, 9),
             Catch::Matchers::WithinRel(sigma2_closed_form(full, 9), 1e-12));
}

TEST_CASE("quadrature oracle for martingale values") {
  MartingaleState s = random_state(2, 9, 31);
  std::mt19937_64 rng(5150);
  std::uniform_int_distribution<long> pick(0, level_arc_count(2, 9) - 1);
  auto F = [&s](double t) {
    Complex v(0, 0);
    for (int k : s.tau)
      v += s.coeff(k) * unit(std::pow(2.0, k) * t);
    return v;
  };
  for (int trial = 0; trial < 10; ++trial) {
    NuAdicArc arc(2, 9, mpz_class(pick(rng)));
    ExactArc e = arc.to_exact();
    double lo = to_double(e.start), len = to_double(e.length);
    double re = detail::integrate([&](double t) { return F(t).real(); }, lo, lo + len, 1e-13);
    double im = detail::integrate([&](double t) { return F(t).imag(); }, lo, lo + len, 1e-13);
    Complex avg = Complex(re, im) / len;
    Complex got = martingale_value(s, 9, arc);
    CHECK_THAT(std::abs(avg - got), Catch::Matchers::WithinAbs(0.0, 1e-8));
  }
}

TEST_CASE("n_bar finds the first crossing") {
  MartingaleState s = random_state(2, 40, 21, 0.5);
  int nb = n_bar(s, 1.0, 40);
  if (nb > 0) {
    CHECK(sigma_bar2_closed_form(s, nb) >= 1.0);
    CHECK(sigma_bar2_closed_form(s, nb - 1) < 1.0);
  }
  CHECK(n_bar(s, 1e9, 40) == -1);
  CHECK_THROWS(n_bar(s, 0.5, 40));
}

TEST_CASE("increment bound: isolated coefficient is exact") {
  // a_n = 0 for n < N, a_N != 0: no tail terms, |dM_N| = c |a_N| on every arc.
  std::vector<Complex> a(8, Complex(0, 0));
  a[7] = Complex(0.6, 0.3);
  MartingaleState s = MartingaleState::make(2, a);
  IncrementBoundReport rep = increment_bound_check(s, 7);
  CHECK_THAT(rep.c, Catch::Matchers::WithinAbs(2.0 / std::numbers::pi, 1e-15));
  CHECK_THAT(rep.max_deviation, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("increment deviation decays with the gap") {
  double prev = 1e9;
  for (int m : {2, 4, 6, 8}) {
    std::vector<Complex> a(m + 3, Complex(0, 0));
    a[1] = Complex(1, 0);
    a[m + 2] = Complex(0.5, 0);
    MartingaleState s = MartingaleState::make(2, a);
    IncrementBoundReport rep = increment_bound_check(s, m + 2);
    CHECK(rep.gap == m);
    CHECK(rep.max_deviation < prev);
    prev = rep.max_deviation;
  }
}

TEST_CASE("survivor measures: trivial radii and monotonicity") {
  MartingaleState s = random_state(2, 8, 42, 0.2);
  double big = 0.0;
  for (int k : s.tau) big += std::abs(s.coeff(k));
  SurvivorReport all = survivor_measure(s, big + 1.0, 8);
  CHECK(all.measure == 1);
  SurvivorReport none = survivor_measure(s, 0.0, 8);
  CHECK(none.measure == 0);
  // Monotone nonincreasing in N, with exact power-of-two denominators.
  SurvivorReport r = survivor_measure(s, 0.8, 8);
  Rational prev(1);
  for (const SurvivorLevel& lv : r.levels) {
    CHECK(lv.measure <= prev);
    prev = lv.measure;
    mpz_class den = lv.measure.get_den();
    while (den % 2 == 0) den /= 2;
    CHECK(den == 1);
  }
}

TEST_CASE("survivor sets nest across N") {
  MartingaleState s = random_state(2, 7, 1234, 0.2);
  SurvivorReport r6 = survivor_measure(s, 0.9, 6);
  SurvivorReport r7 = survivor_measure(s, 0.9, 7);
  // Every level-7 survivor's parent is a level-6 survivor.
  std::vector<mpz_class> parents;
  for (const NuAdicArc& a : r6.survivors) parents.push_back(a.index);
  for (const NuAdicArc& a : r7.survivors) {
    mpz_class p = a.index / 2;
    bool found = false;
    for (const mpz_class& q : parents) found = found || q == p;
    CHECK(found);
  }
}

TEST_CASE("kolmogorov bound") {
  // Single coefficient: all four level-1 values share one modulus, so the
  // survivor set is all-or-nothing and the bound holds either way.
  MartingaleState one = single_coeff_state();
  KolmogorovReport k1 = kolmogorov_bound_check(one, 0.5, 1);
  CHECK(k1.holds);
  CHECK(k1.measure == 0.0);  // |M_1| = 2/pi > 0.5 everywhere
  KolmogorovReport k2 = kolmogorov_bound_check(one, 0.7, 1);
  CHECK(k2.holds);
  CHECK(k2.measure == 1.0);

  for (unsigned seed : {3u, 9u, 27u}) {
    MartingaleState s = random_state(2, 8, seed, 0.2);
    for (double R : {0.3, 0.8, 1.5})
      CHECK(kolmogorov_bound_check(s, R, 8).holds);
  }
}

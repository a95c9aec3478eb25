#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ibp/circle.hpp"

using namespace ibp;

TEST_CASE("poisson kernel closed form values") {
  CHECK_THAT(poisson_kernel(DiskPoint(0, 0), Turn(0.37)),
             Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(poisson_kernel(DiskPoint(0.5, 0), Turn(0.0)),
             Catch::Matchers::WithinAbs(3.0, 1e-14));
  CHECK_THAT(poisson_kernel(DiskPoint(0.5, 0), Turn(0.5)),
             Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-14));
  CHECK_THROWS(DiskPoint(1.0, 0.0));
}

TEST_CASE("harmonic measure basics") {
  CHECK_THAT(harmonic_measure(DiskPoint(0, 0), {Arc(0.1, 0.3)}),
             Catch::Matchers::WithinAbs(0.3, 1e-10));
  CHECK_THAT(harmonic_measure(DiskPoint(0.4, -0.2), {Arc(0.0, 1.0)}),
             Catch::Matchers::WithinAbs(1.0, 1e-9));
}

// Closed-form antiderivative oracle: for z = r on the positive real axis the
// harmonic measure of the arc {|t| <= a} (turns) is
//   (1/pi) * [ atan( (1+r)/(1-r) * tan(pi t) ) ] evaluated at t = a, doubled.
static double poisson_arc_oracle(double r, double a) {
  double k = (1.0 + r) / (1.0 - r);
  return 2.0 / std::numbers::pi * std::atan(k * std::tan(std::numbers::pi * a));
}

TEST_CASE("harmonic measure matches the arctan antiderivative") {
  double r = 0.5, a = 1.0 / 8.0;
  double oracle = poisson_arc_oracle(r, a);
  double got = harmonic_measure(DiskPoint(r, 0), {Arc(-a, 2 * a)});
  CHECK_THAT(got, Catch::Matchers::WithinAbs(oracle, 1e-10));

  // A second, asymmetric configuration via additivity of the antiderivative.
  double got2 = harmonic_measure(DiskPoint(r, 0), {Arc(0.0, 0.3)});
  double oracle2 = 0.5 * (poisson_arc_oracle(r, 0.3) + 0.0) +
                   0.5 * poisson_arc_oracle(r, 0.3);
  // antiderivative F(t) = (1/2pi->turns) atan form; arc [0,0.3]:
  // w = F(0.3) - F(0) with F odd; F(0.3) = oracle(r,0.3)/2.
  oracle2 = poisson_arc_oracle(r, 0.3) / 2.0;
  CHECK_THAT(got2, Catch::Matchers::WithinAbs(oracle2, 1e-10));
}

TEST_CASE("poisson normalization over 100 random z") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> radius(0.0, 0.995), angle(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    double r = radius(rng), t = angle(rng);
    DiskPoint z(r * std::cos(kTwoPi * t), r * std::sin(kTwoPi * t));
    CHECK_THAT(harmonic_measure(z, {Arc(0.0, 1.0)}),
               Catch::Matchers::WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("harmonic measure monotone in the set") {
  DiskPoint z(0.3, 0.4);
  double small = harmonic_measure(z, {Arc(0.1, 0.2)});
  double big = harmonic_measure(z, {Arc(0.05, 0.4)});
  CHECK(small <= big + 1e-12);
  CHECK_THROWS(harmonic_measure(z, {Arc(0.0, 0.3), Arc(0.2, 0.3)}));
}

TEST_CASE("arc center point and arc of point are inverse") {
  CHECK(arc_of_point(DiskPoint(0, 0)).full_circle());
  DiskPoint z = arc_center_point(Arc(Turn(1.0 - 0.125), 0.25));
  CHECK_THAT(z.re, Catch::Matchers::WithinAbs(0.75, 1e-14));
  CHECK_THAT(z.im, Catch::Matchers::WithinAbs(0.0, 1e-14));

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Arc I(u(rng), 0.001 + 0.998 * u(rng));
    Arc back = arc_of_point(arc_center_point(I));
    CHECK_THAT(back.length, Catch::Matchers::WithinAbs(I.length, 1e-12));
    CHECK_THAT(frac_turn(back.start.value - I.start.value + 0.5),
               Catch::Matchers::WithinAbs(0.5, 1e-9));
  }
}

TEST_CASE("scale arc") {
  Arc I(0.2, 0.3);
  Arc same = scale_arc(I, 1.0);
  CHECK(same.length == I.length);
  CHECK(scale_arc(I, 4.0).full_circle());
  Arc tripled = scale_arc(Arc(0.0, 0.1), 3.0);
  CHECK_THAT(tripled.length, Catch::Matchers::WithinAbs(0.3, 1e-14));
  CHECK_THAT(tripled.midpoint().value, Catch::Matchers::WithinAbs(0.05, 1e-14));
}

TEST_CASE("pseudohyperbolic distance") {
  CHECK(pseudohyperbolic_distance(DiskPoint(0.3, 0.2), DiskPoint(0.3, 0.2)) == 0.0);
  CHECK_THAT(pseudohyperbolic_distance(DiskPoint(0, 0), DiskPoint(0.5, 0)),
             Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(pseudohyperbolic_distance(DiskPoint(0.5, 0), DiskPoint(-0.5, 0)),
             Catch::Matchers::WithinAbs(0.8, 1e-15));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int i = 0; i < 200; ++i) {
    DiskPoint a(u(rng), u(rng) * 0.5), b(u(rng), u(rng) * 0.5);
    double d1 = pseudohyperbolic_distance(a, b);
    double d2 = pseudohyperbolic_distance(b, a);
    CHECK_THAT(d1, Catch::Matchers::WithinAbs(d2, 1e-14));
    CHECK(d1 < 1.0);
  }
}

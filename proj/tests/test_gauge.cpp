#include <catch2/catch_amalgamated.hpp>

#include "ibp/gauge.hpp"

using namespace ibp;

TEST_CASE("power gauge inverse is analytic") {
  // phi(t) = t^{1-delta} with delta = 0.5: psi(t) = t^{-0.5},
  // psi^{-1}(y) = y^{-2}.
  GaugeFunction g = GaugeFunction::power(0.5);
  CHECK_THAT(psi_generalized_inverse(g, 4.0),
             Catch::Matchers::WithinAbs(0.0625, 1e-12));
  CHECK_THAT(g.psi(0.0625), Catch::Matchers::WithinAbs(4.0, 1e-12));
}

TEST_CASE("generalized inverse is nonincreasing") {
  GaugeFunction g = GaugeFunction::power_log(1.0, 1.0);  // phi = t log(e/t)
  double prev = psi_generalized_inverse(g, 1.5);
  for (double t = 2.0; t < 40.0; t *= 1.5) {
    double cur = psi_generalized_inverse(g, t);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("inverse consistency: psi above the threshold left of the crossing") {
  GaugeFunction g = GaugeFunction::power_log(1.0, 2.0);
  for (double t : {2.0, 5.0, 17.0}) {
    double s = psi_generalized_inverse(g, t);
    for (double frac : {0.9, 0.5, 0.1})
      CHECK(g.psi(s * frac) >= t - 1e-9);
  }
}

TEST_CASE("degenerate table returns the bracket infimum") {
  // psi barely above 1 everywhere: for a large threshold the crossing set is
  // empty inside the bracket and the bracket infimum comes back.
  GaugeFunction g = GaugeFunction::power(0.999);
  double v = psi_generalized_inverse(g, 1e9);
  CHECK(v <= 1e-17);
}

TEST_CASE("gauge table interpolation") {
  // Table for phi(t) = sqrt(t) on a log grid; interpolation should track the
  // analytic values closely in between the nodes.
  std::vector<std::pair<double, double>> rows;
  for (double t = 1.0; t >= 1e-12; t /= 10.0) rows.emplace_back(t, std::sqrt(t));
  GaugeFunction g = GaugeFunction::from_table(rows);
  CHECK_THAT(g.phi(3e-5), Catch::Matchers::WithinRel(std::sqrt(3e-5), 1e-6));
  CHECK(g.psi_unbounded());
  GaugeFunction p = GaugeFunction::power(0.5);
  double inv_t = psi_generalized_inverse(g, 7.0);
  double inv_p = psi_generalized_inverse(p, 7.0);
  CHECK_THAT(inv_t, Catch::Matchers::WithinRel(inv_p, 1e-4));
}

TEST_CASE("invalid gauges rejected") {
  CHECK_THROWS(GaugeFunction::power(0.0));
  CHECK_THROWS(GaugeFunction::power(1.5));
  CHECK_THROWS(GaugeFunction::from_table({{1.0, 1.0}, {0.5, 0.9}}));
  // A table with increasing psi (phi = t^2) passes construction but the
  // generalized inverse requires nonincreasing psi and must reject it.
  std::vector<std::pair<double, double>> rows;
  for (double t = 1.0; t >= 1e-12; t /= 10.0) rows.emplace_back(t, t * t);
  GaugeFunction bad = GaugeFunction::from_table(rows);
  CHECK_THROWS(psi_generalized_inverse(bad, 2.0));
}

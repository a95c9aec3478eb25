#pragma once

// Boundary lifts of Blaschke products: the increasing continuous lift g of
// t -> arg f(e^{2 pi i t}) / (2 pi), arc image measures m(f^n(I)), and
// subarc splitting by prescribed image measure.
//
// The lift increment over an arc is computed by incremental argument
// tracking: with sample spacing below 0.4 / K_max each step's true increment
// lies in (0, 0.5), so principal arguments of consecutive ratios sum to the
// exact total winding (no quadrature error accumulates; the sum telescopes).
// For very short arcs, where the endpoint arguments cancel catastrophically,
// the increment is instead integrated from the closed form g'(t) = |f'(e^{2
// pi i t})| by Simpson quadrature, which is accurate in relative terms.

#include <cmath>
#include <stdexcept>

#include "ibp/blaschke.hpp"
#include "ibp/circle.hpp"

namespace ibp {

struct BoundaryLift {
  Arc base;
  double g_lo = 0.0;  // lift value at the start (principal argument, in turns)
  double g_hi = 0.0;  // lift value at the end

  double increment() const { return g_hi - g_lo; }
  // The image arc, capped at the full circle.
  Arc image() const { return Arc(Turn(g_lo), std::min(1.0, increment())); }
};

namespace lift_detail {

// Lift increment over [s, s+len] by argument tracking. Steps adapt: any
// ratio-argument at or beyond 0.45 turns triggers local halving; failure to
// resolve below the floor step is a hard error (a silent branch error would
// corrupt every downstream arc measure).
inline double tracked_increment(const BlaschkeProduct& f, double s, double len,
                                double K_max) {
  double h = std::min(len, 0.2 / K_max);
  long steps = std::max(1L, static_cast<long>(std::ceil(len / h)));
  h = len / steps;
  double total = 0.0;
  Complex prev = f.evaluate(unit(s));
  for (long i = 1; i <= steps; ++i) {
    double t = s + (static_cast<double>(i) / steps) * len;
    Complex cur = f.evaluate(unit(t));
    double d = std::arg(cur / prev) / kTwoPi;
    if (d <= 0.0 || d >= 0.45) {
      // Resolve this step by recursive halving.
      double lo = s + (static_cast<double>(i - 1) / steps) * len;
      double sub = t - lo;
      if (sub < 1e-15)
        throw std::runtime_error("boundary lift: unresolvable argument jump");
      d = tracked_increment(f, lo, sub / 2.0, K_max) +
          tracked_increment(f, lo + sub / 2.0, sub / 2.0, K_max);
    }
    total += d;
    prev = cur;
  }
  return total;
}

inline double quadrature_increment(const BlaschkeProduct& f, double s, double len) {
  auto fp = [&f](double t) { return f.derivative_modulus_on_circle(Turn(t)); };
  return detail::integrate(fp, s, s + len, 1e-16 + 1e-13 * len);
}

inline double increment(const BlaschkeProduct& f, double s, double len) {
  if (f.is_monomial()) return f.origin_multiplicity * len;  // exact
  double K_max = f.constants().K_max;
  if (len * K_max < 1e-6) return quadrature_increment(f, s, len);
  return tracked_increment(f, s, len, K_max);
}

}  // namespace lift_detail

inline BoundaryLift boundary_lift(const BlaschkeProduct& f, const Arc& I) {
  BoundaryLift L;
  L.base = I;
  L.g_lo = frac_turn(std::arg(f.evaluate(I.z_minus())) / kTwoPi);
  L.g_hi = L.g_lo + lift_detail::increment(f, I.start.value, I.length);
  return L;
}

// m(f^n(I)) = min(1, lift increment of f^n over I). Once an intermediate
// image covers the circle, every further image does too.
inline double image_arc_measure(const BlaschkeProduct& f, int n, const Arc& I) {
  if (n < 1) throw std::invalid_argument("image_arc_measure: n >= 1 required");
  if (f.is_monomial()) {
    double inc = I.length;
    for (int k = 0; k < n; ++k) {
      inc *= f.origin_multiplicity;
      if (inc >= 1.0) return 1.0;
    }
    return inc;
  }
  Arc cur = I;
  for (int k = 0; k < n; ++k) {
    BoundaryLift L = boundary_lift(f, cur);
    if (L.increment() >= 1.0) return 1.0;
    cur = L.image();
  }
  return cur.length;
}

// The n-th image arc itself (meaningful while the measure stays below 1).
inline Arc image_arc(const BlaschkeProduct& f, int n, const Arc& I) {
  Arc cur = I;
  for (int k = 0; k < n; ++k) cur = boundary_lift(f, cur).image();
  return cur;
}

// The subarc of I sharing I's counterclockwise start endpoint whose n-th
// image has measure `target`, found by bisection on the monotone lift.
inline Arc split_arc_by_image_measure(const BlaschkeProduct& f, int n, const Arc& I,
                                      double target, double tol = 1e-12) {
  if (!(target > 0.0 && target < 1.0))
    throw std::invalid_argument("split: target must lie in (0,1)");
  double full = image_arc_measure(f, n, I);
  if (full < target)
    throw std::invalid_argument("split: target exceeds m(f^n(I))");
  if (full == target) return I;
  if (f.is_monomial()) {
    double scale = std::pow(static_cast<double>(f.origin_multiplicity), n);
    return Arc(I.start, target / scale);
  }
  double lo = 0.0, hi = I.length;
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    double v = image_arc_measure(f, n, Arc(I.start, mid));
    if (std::abs(v - target) <= tol) return Arc(I.start, mid);
    (v < target ? lo : hi) = mid;
  }
  return Arc(I.start, 0.5 * (lo + hi));
}

}  // namespace ibp

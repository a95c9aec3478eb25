#pragma once

// Circle geometry in "turn" coordinates: angles are fractions of a full
// revolution, so the normalized Lebesgue measure of an arc equals its length
// and dyadic subdivision stays exact.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ibp {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Fractional part mapped into [0,1).
inline double frac_turn(double t) {
  double f = t - std::floor(t);
  if (f >= 1.0) f = 0.0;  // guards against rounding at the seam
  return f;
}

// An angle on the unit circle, stored as a fraction of a revolution in [0,1).
struct Turn {
  double value = 0.0;

  Turn() = default;
  explicit Turn(double t) : value(frac_turn(t)) {}

  Turn operator+(double d) const { return Turn(value + d); }
  friend bool operator==(const Turn& a, const Turn& b) { return a.value == b.value; }
};

inline Complex unit(Turn t) { return std::polar(1.0, kTwoPi * t.value); }
inline Complex unit(double turns) { return std::polar(1.0, kTwoPi * frac_turn(turns)); }

// Closed subarc of the circle: all angles start + s for s in [0, length].
// length == 1 encodes the full circle.
struct Arc {
  Turn start;
  double length = 1.0;

  Arc() = default;
  Arc(Turn s, double len) : start(s), length(len) {
    if (!(len > 0.0) || len > 1.0)
      throw std::invalid_argument("Arc: length must lie in (0,1]");
  }
  Arc(double s, double len) : Arc(Turn(s), len) {}

  bool full_circle() const { return length == 1.0; }
  Turn midpoint() const { return start + length / 2.0; }
  Turn end() const { return start + length; }
  Complex z_minus() const { return unit(start); }
  Complex z_plus() const { return unit(end()); }

  // Membership of an angle, with an absolute slack for rounding at endpoints.
  bool contains(double t, double slack = 0.0) const {
    if (full_circle()) return true;
    double rel = frac_turn(t - start.value);
    return rel <= length + slack || rel >= 1.0 - slack;
  }
};

// Concentric arc centered at the midpoint of I with c times its length,
// capped at the full circle.
inline Arc scale_arc(const Arc& I, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("scale_arc: c must be positive");
  double len = c * I.length;
  if (len >= 1.0) return Arc(Turn(0.0), 1.0);
  return Arc(Turn(I.midpoint().value - len / 2.0), len);
}

// A point of the open unit disk.
struct DiskPoint {
  double re = 0.0;
  double im = 0.0;

  DiskPoint() = default;
  DiskPoint(double r, double i) : re(r), im(i) {
    if (modulus() >= 1.0)
      throw std::invalid_argument("DiskPoint: modulus must be < 1");
  }
  explicit DiskPoint(Complex z) : DiskPoint(z.real(), z.imag()) {}

  double modulus() const { return std::hypot(re, im); }
  Complex to_complex() const { return Complex(re, im); }
};

// The arc I(z): length 1-|z|, centered at z/|z|; I(0) is the full circle.
inline Arc arc_of_point(const DiskPoint& z) {
  double r = z.modulus();
  if (r == 0.0) return Arc(Turn(0.0), 1.0);
  double center = std::atan2(z.im, z.re) / kTwoPi;
  double len = 1.0 - r;
  return Arc(Turn(center - len / 2.0), len);
}

// The point z(I) = (1 - m(I)) * midpoint direction; full circle maps to 0.
inline DiskPoint arc_center_point(const Arc& I) {
  if (I.full_circle()) return DiskPoint(0.0, 0.0);
  Complex z = (1.0 - I.length) * unit(I.midpoint());
  return DiskPoint(z);
}

// Poisson kernel P_z(xi) = (1-|z|^2)/|xi-z|^2 at xi = e^{2 pi i t}.
inline double poisson_kernel(const DiskPoint& z, Turn xi) {
  double r2 = z.re * z.re + z.im * z.im;
  Complex w = unit(xi) - z.to_complex();
  return (1.0 - r2) / std::norm(w);
}

namespace detail {

// Adaptive Simpson quadrature with absolute tolerance.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

// Verifies pairwise disjointness of a list of arcs (shared endpoints allowed
// up to slack).
inline void require_disjoint(const std::vector<Arc>& arcs, double slack = 1e-13) {
  std::vector<std::pair<double, double>> spans;
  for (const Arc& a : arcs) {
    if (a.full_circle() && arcs.size() > 1)
      throw std::invalid_argument("arcs overlap: full circle plus another arc");
    spans.emplace_back(a.start.value, a.length);
  }
  std::sort(spans.begin(), spans.end());
  for (size_t i = 0; i + 1 < spans.size(); ++i) {
    if (spans[i].first + spans[i].second > spans[i + 1].first + slack)
      throw std::invalid_argument("arcs overlap");
  }
  if (spans.size() >= 2) {
    double wrap = spans.back().first + spans.back().second - 1.0;
    if (wrap > spans.front().first + slack)
      throw std::invalid_argument("arcs overlap across the seam");
  }
}

// Harmonic measure w(z, E) = integral over E of the Poisson kernel, by
// adaptive quadrature with absolute tolerance tol.
inline double harmonic_measure(const DiskPoint& z, const std::vector<Arc>& E,
                               double tol = 1e-10) {
  require_disjoint(E);
  double total = 0.0;
  auto f = [&z](double t) { return poisson_kernel(z, Turn(t)); };
  for (const Arc& a : E) {
    // Split at the angle of z (the kernel's peak) for robust refinement.
    double s = a.start.value, len = a.length;
    double peak = frac_turn(std::atan2(z.im, z.re) / kTwoPi - s);
    double sub = tol / (2.0 * E.size());
    if (peak > 0.0 && peak < len) {
      total += detail::integrate(f, s, s + peak, sub);
      total += detail::integrate(f, s + peak, s + len, sub);
    } else {
      total += detail::integrate(f, s, s + len, 2.0 * sub);
    }
  }
  return std::min(total, 1.0 + tol);
}

// Pseudohyperbolic distance |(z-w)/(1-conj(w)z)|.
inline double pseudohyperbolic_distance(const DiskPoint& z, const DiskPoint& w) {
  Complex a = z.to_complex(), b = w.to_complex();
  return std::abs((a - b) / (1.0 - std::conj(b) * a));
}

}  // namespace ibp

#pragma once

// Finite Blaschke products fixing the origin:
//   f(z) = alpha * z^m * prod_n (z - z_n)/(1 - conj(z_n) z),  |alpha| = 1, m >= 1.
// Evaluation, derivatives on the circle in closed form, iteration, and the
// expansion constants K_min = min |f'| on the circle (> 1 when f is not a
// rotation), K_max, and max |f''|.

#include <complex>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ibp/circle.hpp"

namespace ibp {

struct IterateConstants {
  double K_min = 0.0;   // min of |f'| on the circle
  double K_max = 0.0;   // max of |f'| on the circle
  double C2_max = 0.0;  // max of |f''| on the circle
  int degree = 0;       // m + number of zeros; covering degree on the circle
};

class BlaschkeProduct {
 public:
  double rotation_turns = 0.0;  // alpha = e^{2 pi i rotation_turns}
  int origin_multiplicity = 1;  // m
  std::vector<DiskPoint> zeros;

  BlaschkeProduct() = default;
  BlaschkeProduct(double rot_turns, int m, std::vector<DiskPoint> zs)
      : rotation_turns(frac_turn(rot_turns)),
        origin_multiplicity(m),
        zeros(std::move(zs)),
        cache_(std::make_shared<Cache>()) {
    if (m < 1) throw std::invalid_argument("origin multiplicity must be >= 1");
  }

  static BlaschkeProduct monomial(int m) { return BlaschkeProduct(0.0, m, {}); }

  bool is_rotation() const { return origin_multiplicity == 1 && zeros.empty(); }
  bool is_monomial() const { return zeros.empty() && rotation_turns == 0.0; }
  int degree() const { return origin_multiplicity + static_cast<int>(zeros.size()); }

  Complex alpha() const { return unit(rotation_turns); }

  Complex evaluate(Complex z) const {
    if (std::abs(z) > 1.0 + 1e-12)
      throw std::invalid_argument("evaluate: |z| must be <= 1");
    Complex w = alpha();
    for (int i = 0; i < origin_multiplicity; ++i) w *= z;
    for (const DiskPoint& p : zeros) {
      Complex a = p.to_complex();
      w *= (z - a) / (1.0 - std::conj(a) * z);
    }
    return w;
  }

  // n-fold composition; n = 0 is the identity.
  Complex iterate(int n, Complex z) const {
    for (int i = 0; i < n; ++i) z = evaluate(z);
    return z;
  }

  // |f'(xi)| on the circle: m + sum_n (1-|z_n|^2)/|xi - z_n|^2.
  double derivative_modulus_on_circle(Turn xi) const {
    Complex x = unit(xi);
    double v = origin_multiplicity;
    for (const DiskPoint& p : zeros) {
      double r2 = p.re * p.re + p.im * p.im;
      v += (1.0 - r2) / std::norm(x - p.to_complex());
    }
    return v;
  }

  // f'(z) and f''(z) away from zeros of f, via the logarithmic derivative
  // L = f'/f = m/z + sum_n [1/(z-z_n) + conj(z_n)/(1-conj(z_n)z)]:
  //   f' = f L,  f'' = f (L' + L^2).
  Complex derivative(Complex z) const {
    auto [L, Lp] = log_derivatives(z);
    return evaluate(z) * L;
  }
  Complex second_derivative(Complex z) const {
    auto [L, Lp] = log_derivatives(z);
    return evaluate(z) * (Lp + L * L);
  }

  // The boundary angle map in turns: t -> arg f(e^{2 pi i t}) / (2 pi).
  Turn boundary_angle(Turn t) const {
    Complex w = evaluate(unit(t));
    return Turn(std::arg(w) / kTwoPi);
  }
  Turn boundary_angle_iterate(int n, Turn t) const {
    for (int i = 0; i < n; ++i) t = boundary_angle(t);
    return t;
  }

  // Expansion constants; computed once and cached. Throws for rotations.
  const IterateConstants& constants() const {
    if (!cache_) throw std::logic_error("default-constructed BlaschkeProduct");
    std::call_once(cache_->once, [this] { cache_->value = compute_constants(); });
    return cache_->value;
  }

 private:
  std::pair<Complex, Complex> log_derivatives(Complex z) const {
    Complex L = Complex(origin_multiplicity, 0.0) / z;
    Complex Lp = -Complex(origin_multiplicity, 0.0) / (z * z);
    for (const DiskPoint& p : zeros) {
      Complex a = p.to_complex(), ac = std::conj(a);
      L += 1.0 / (z - a) + ac / (1.0 - ac * z);
      Lp += -1.0 / ((z - a) * (z - a)) + (ac * ac) / ((1.0 - ac * z) * (1.0 - ac * z));
    }
    return {L, Lp};
  }

  IterateConstants compute_constants() const {
    if (is_rotation())
      throw std::invalid_argument("iterate constants: f must not be a rotation");
    IterateConstants c;
    c.degree = degree();
    const int grid = 4096;
    auto fp = [this](double t) { return derivative_modulus_on_circle(Turn(t)); };
    auto fpp = [this](double t) { return std::abs(second_derivative(unit(t))); };
    c.K_min = refine_extremum(fp, grid, /*minimize=*/true);
    c.K_max = refine_extremum(fp, grid, /*minimize=*/false);
    c.C2_max = refine_extremum(fpp, grid, /*minimize=*/false);
    if (!(c.K_min > 1.0))
      throw std::runtime_error("iterate constants: computed min |f'| <= 1 (rotation or bad input)");
    return c;
  }

  template <typename F>
  static double refine_extremum(const F& f, int grid, bool minimize) {
    double best = f(0.0);
    int best_i = 0;
    for (int i = 1; i < grid; ++i) {
      double v = f(static_cast<double>(i) / grid);
      if (minimize ? v < best : v > best) {
        best = v;
        best_i = i;
      }
    }
    // Golden-section refinement on the bracketing cell pair.
    double a = static_cast<double>(best_i - 1) / grid;
    double b = static_cast<double>(best_i + 1) / grid;
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-9) {
      bool move_left = minimize ? (f1 < f2) : (f1 > f2);
      if (move_left) {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - gr * (b - a); f1 = f(x1);
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + gr * (b - a); f2 = f(x2);
      }
    }
    double mid = f(0.5 * (a + b));
    return minimize ? std::min({best, f1, f2, mid}) : std::max({best, f1, f2, mid});
  }

  struct Cache {
    std::once_flag once;
    IterateConstants value;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// Smallest Q >= 1 with |f^Q(z)| < epsilon for all |z| <= gamma1, checked on
// the circle |z| = gamma1 (maximum modulus) with a doubling grid.
inline int find_Q(const BlaschkeProduct& f, double epsilon, double gamma1) {
  if (!(epsilon > 0.0 && epsilon < 1.0 && gamma1 > 0.0 && gamma1 < 1.0))
    throw std::invalid_argument("find_Q: epsilon, gamma1 must lie in (0,1)");
  auto q_for_grid = [&](int grid) {
    int q = 1;
    std::vector<Complex> pts(grid);
    for (int i = 0; i < grid; ++i)
      pts[i] = f.evaluate(std::polar(gamma1, kTwoPi * i / grid));
    for (;; ++q) {
      double mx = 0.0;
      for (const Complex& w : pts) mx = std::max(mx, std::abs(w));
      if (mx < epsilon) return q;
      for (Complex& w : pts) w = f.evaluate(w);
      if (q > 10000) throw std::runtime_error("find_Q: no contraction after 10000 iterates");
    }
  };
  int grid = 4096;
  int q = q_for_grid(grid);
  for (;;) {
    grid *= 2;
    int q2 = q_for_grid(grid);
    if (q2 == q) return q;
    q = q2;
  }
}

}  // namespace ibp

#pragma once

// The nu-adic martingale attached to F(z) = sum_n a_n z^{nu^n}: exact arc
// endpoints, martingale values M_n as conditional expectations on the
// generation-n partition, increment bounds, variance bookkeeping, and exact
// survivor-set measures by level pruning.
//
// All level-n arcs have length nu^{-(n+1)}; the image of a level-n arc under
// z^{nu^k} is the level-(n-k) arc with index scaled by nu^k modulo the finer
// period, so every quantity below reduces to integer arithmetic plus one
// complex exponential per term.

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "ibp/exact.hpp"

namespace ibp {

// Average of z over an arc: (-i/2pi)(z_+ - z_-)/m(I); 0 for the full circle.
inline Complex arc_average_z(const Arc& I) {
  if (I.full_circle()) return Complex(0.0, 0.0);
  return Complex(0.0, -1.0) / kTwoPi * (I.z_plus() - I.z_minus()) / I.length;
}

inline mpz_class pow_mpz(int base, long exp) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, static_cast<unsigned long>(exp));
  return r;
}

// The level-n arc [k nu^{-(n+1)}, (k+1) nu^{-(n+1)}].
struct NuAdicArc {
  int nu = 2;
  int level = 0;
  mpz_class index = 0;  // in [0, nu^{level+1})

  NuAdicArc() = default;
  NuAdicArc(int nu_, int level_, mpz_class idx)
      : nu(nu_), level(level_), index(std::move(idx)) {
    if (nu < 2 || level < 0) throw std::invalid_argument("NuAdicArc: bad nu/level");
    if (index < 0 || index >= pow_mpz(nu, level + 1))
      throw std::invalid_argument("NuAdicArc: index out of range");
  }

  ExactArc to_exact() const {
    mpz_class den = pow_mpz(nu, level + 1);
    Rational s(index, den), len(mpz_class(1), den);
    s.canonicalize();
    len.canonicalize();
    return ExactArc(s, len);
  }

  NuAdicArc child(int i) const {
    return NuAdicArc(nu, level + 1, index * nu + i);
  }
  NuAdicArc parent() const {
    if (level == 0) throw std::logic_error("level-0 arc has no parent");
    mpz_class p = index / nu;
    return NuAdicArc(nu, level - 1, p);
  }

  // Image under z^{nu^k}: the level-(level-k) arc containing the image. The
  // start turn j nu^{-(level+1)} scales to j nu^{k-level-1} (mod 1), which in
  // units of the image arc length nu^{k-level-1} is just j modulo the count
  // of arcs at the image level.
  NuAdicArc image(int k) const {
    if (k < 0 || k > level) throw std::invalid_argument("image: 0 <= k <= level required");
    mpz_class idx = index % pow_mpz(nu, level - k + 1);
    return NuAdicArc(nu, level - k, idx);
  }

  // Average of z over this arc: phase at the midpoint, sinc modulus.
  Complex average_z() const {
    Rational mid(2 * index + 1, 2 * pow_mpz(nu, level + 1));
    mid.canonicalize();
    double L = std::pow(static_cast<double>(nu), -(level + 1.0));
    double modulus = std::sin(std::numbers::pi * L) / (std::numbers::pi * L);
    return unit(mid) * modulus;
  }
};

struct MartingaleState {
  int nu = 2;
  std::vector<Complex> a;  // 1-based: a[n] is the n-th coefficient; a[0] = 0
  std::vector<int> tau;    // increasing indices with a_n != 0

  static MartingaleState make(int nu, std::vector<Complex> coeffs_1based) {
    if (nu < 2) throw std::invalid_argument("MartingaleState: nu >= 2 required");
    MartingaleState s;
    s.nu = nu;
    s.a = std::move(coeffs_1based);
    if (s.a.empty()) s.a.push_back(Complex(0, 0));
    s.a[0] = Complex(0, 0);
    for (size_t n = 1; n < s.a.size(); ++n)
      if (s.a[n] != Complex(0, 0)) s.tau.push_back(static_cast<int>(n));
    return s;
  }

  Complex coeff(int n) const {
    return (n >= 1 && n < static_cast<int>(a.size())) ? a[n] : Complex(0, 0);
  }
  int horizon() const { return static_cast<int>(a.size()) - 1; }
};

// Number of arcs at a level, guarded so exact enumeration stays bounded.
inline long level_arc_count(int nu, int level, long cap = (1L << 24)) {
  double bits = (level + 1.0) * std::log2(static_cast<double>(nu));
  if (bits > std::log2(static_cast<double>(cap)))
    throw std::runtime_error("exact enumeration infeasible at this level");
  long n = 1;
  for (int i = 0; i <= level; ++i) n *= nu;
  return n;
}

// M_n on a level-n arc: sum over nonzero a_k, k <= n, of a_k times the
// average of z over the arc's image under z^{nu^k}. M_0-with-no-coefficient
// conventions give 0 for n = 0.
inline Complex martingale_value(const MartingaleState& s, int n, const NuAdicArc& arc) {
  if (arc.level != n) throw std::invalid_argument("martingale_value: level/arc mismatch");
  if (arc.nu != s.nu) throw std::invalid_argument("martingale_value: nu mismatch");
  Complex v(0, 0);
  for (int k : s.tau) {
    if (k > n) break;
    v += s.coeff(k) * arc.image(k).average_z();
  }
  return v;
}

// --- closed-form variance bookkeeping ------------------------------------
//
// Because distinct powers nu^j, nu^k are incongruent modulo nu^{N+1}, the
// cross terms of the piecewise-constant projections integrate to zero and
//   sigma(N)^2 = sum_{k<=N} |a_k|^2 sinc^2(pi nu^{k-N-1}),  sinc x = sin(x)/x.
// Increment norms follow from orthogonality:
//   int |dM_n|^2 dm = sigma(n)^2 - sigma(n-1)^2,
// both identities are cross-checked against brute-force enumeration in tests.

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

inline double sigma2_closed_form(const MartingaleState& s, int N) {
  double total = 0.0;
  for (int k : s.tau) {
    if (k > N) break;
    double L = std::pow(static_cast<double>(s.nu), static_cast<double>(k - N - 1));
    double m = sinc(std::numbers::pi * L);
    total += std::norm(s.coeff(k)) * m * m;
  }
  return total;
}

inline double increment_l2_closed_form(const MartingaleState& s, int n) {
  return sigma2_closed_form(s, n) - sigma2_closed_form(s, n - 1);
}

inline double sigma_bar2_closed_form(const MartingaleState& s, int N) {
  double total = 0.0;
  for (int n : s.tau) {
    if (n > N) break;
    total += increment_l2_closed_form(s, n);
  }
  return total;
}

struct VarianceReport {
  double sigma2 = 0.0;      // int |M_N|^2 dm, by exact enumeration
  double sigma_bar2 = 0.0;  // sum over n in tau of int |dM_n|^2 dm
  double increments_sum = 0.0;  // sum over all n <= N of int |dM_n|^2 dm
};

// Brute-force variance by enumerating every arc at the levels involved.
inline VarianceReport variance(const MartingaleState& s, int N) {
  VarianceReport r;
  long count = level_arc_count(s.nu, N);
  double h = 1.0 / static_cast<double>(count);
  for (long i = 0; i < count; ++i) {
    NuAdicArc arc(s.nu, N, mpz_class(static_cast<long>(i)));
    r.sigma2 += h * std::norm(martingale_value(s, N, arc));
  }
  for (int n = 1; n <= N; ++n) {
    long cn = level_arc_count(s.nu, n);
    double hn = 1.0 / static_cast<double>(cn);
    bool in_tau = s.coeff(n) != Complex(0, 0);
    double inc = 0.0;
    for (long i = 0; i < cn; ++i) {
      NuAdicArc arc(s.nu, n, mpz_class(static_cast<long>(i)));
      Complex d = martingale_value(s, n, arc) -
                  martingale_value(s, n - 1, arc.parent());
      inc += hn * std::norm(d);
    }
    r.increments_sum += inc;
    if (in_tau) r.sigma_bar2 += inc;
  }
  return r;
}

// First N with running sigma-bar^2 >= k (the jumps happen only at indices in
// tau). Returns -1 when the horizon is exhausted ("infinity" marker).
inline int n_bar(const MartingaleState& s, double k, int horizon) {
  if (!(k >= 1.0)) throw std::invalid_argument("n_bar: k >= 1 required");
  double acc = 0.0;
  for (int n : s.tau) {
    if (n > horizon) break;
    acc += increment_l2_closed_form(s, n);
    if (acc >= k) return n;
  }
  return -1;
}

struct IncrementBoundReport {
  int n = 0;
  int gap = 0;            // m: zero run length before n
  double c = 0.0;         // sin(pi/nu)/(pi/nu)
  double max_deviation = 0.0;  // max over arcs of ||dM_n| - c |a_n||
  double c_hat = 0.0;     // max_deviation * nu^gap
};

// Exact deviation of |dM_n| from c |a_n| over every level-n arc.
inline IncrementBoundReport increment_bound_check(const MartingaleState& s, int n) {
  for (size_t i = 1; i < s.a.size(); ++i)
    if (std::abs(s.a[i]) > 1.0 + 1e-12)
      throw std::invalid_argument("increment bound: requires |a_k| <= 1");
  IncrementBoundReport rep;
  rep.n = n;
  int prev = 0;
  for (int t : s.tau)
    if (t < n) prev = t;
  rep.gap = n - prev - 1;
  rep.c = sinc(std::numbers::pi / s.nu);
  long count = level_arc_count(s.nu, n);
  double target = rep.c * std::abs(s.coeff(n));
  for (long i = 0; i < count; ++i) {
    NuAdicArc arc(s.nu, n, mpz_class(static_cast<long>(i)));
    Complex d = martingale_value(s, n, arc) -
                martingale_value(s, n - 1, arc.parent());
    rep.max_deviation = std::max(rep.max_deviation, std::abs(std::abs(d) - target));
  }
  rep.c_hat = rep.max_deviation * std::pow(static_cast<double>(s.nu), rep.gap);
  return rep;
}

struct SurvivorLevel {
  int level = 0;
  long surviving_count = 0;
  Rational measure;  // surviving_count * nu^{-(level+1)}, exact
  double sigma2 = 0.0;
  double sigma_bar2 = 0.0;
};

struct SurvivorReport {
  std::vector<SurvivorLevel> levels;
  std::vector<NuAdicArc> survivors;  // at the final level
  Rational measure;                  // m(A(R, N)), exact

  double max_abs_increment = 0.0;    // max over levels/arcs of |dM_n|
};

// A(R, N) = {xi : max_{1<=n<=N} |M_n(xi)| <= R} by level pruning: a level-n
// arc survives iff its parent survived and |M_n| <= R on it. Memory tracks
// the survivor count only; enumeration is guarded by level_arc_count.
inline SurvivorReport survivor_measure(const MartingaleState& s, double R, int N,
                                       long cap = (1L << 24)) {
  if (!(R >= 0.0)) throw std::invalid_argument("survivor_measure: R >= 0 required");
  SurvivorReport rep;
  std::vector<mpz_class> alive;
  for (int i = 0; i < s.nu; ++i) alive.emplace_back(i);
  std::vector<Complex> alive_val(alive.size(), Complex(0, 0));
  // Level 0 values:
  for (size_t j = 0; j < alive.size(); ++j)
    alive_val[j] = martingale_value(s, 0, NuAdicArc(s.nu, 0, alive[j]));
  // Note: M_0 has at most the k=0 term, which does not exist (tau >= 1), so
  // level 0 never prunes; the loop below starts the real work at level 1.
  std::vector<mpz_class> cur = std::move(alive);
  for (int n = 1; n <= N; ++n) {
    std::vector<mpz_class> next;
    next.reserve(cur.size() * s.nu);
    double max_inc = 0.0;
    for (const mpz_class& idx : cur) {
      NuAdicArc par(s.nu, n - 1, idx);
      Complex pv = martingale_value(s, n - 1, par);
      for (int i = 0; i < s.nu; ++i) {
        NuAdicArc c = par.child(i);
        Complex v = martingale_value(s, n, c);
        max_inc = std::max(max_inc, std::abs(v - pv));
        if (std::abs(v) <= R) next.push_back(c.index);
      }
    }
    if (static_cast<long>(next.size()) > cap)
      throw std::runtime_error("survivor_measure: survivor count exceeds cap");
    rep.max_abs_increment = std::max(rep.max_abs_increment, max_inc);
    cur = std::move(next);
    SurvivorLevel lv;
    lv.level = n;
    lv.surviving_count = static_cast<long>(cur.size());
    lv.measure = Rational(mpz_class(lv.surviving_count), pow_mpz(s.nu, n + 1));
    lv.measure.canonicalize();
    lv.sigma2 = sigma2_closed_form(s, n);
    lv.sigma_bar2 = sigma_bar2_closed_form(s, n);
    rep.levels.push_back(lv);
    if (cur.empty()) break;
  }
  for (const mpz_class& idx : cur)
    rep.survivors.emplace_back(s.nu, rep.levels.empty() ? 0 : rep.levels.back().level, idx);
  rep.measure = rep.levels.empty() ? Rational(1) : rep.levels.back().measure;
  return rep;
}

struct KolmogorovReport {
  double measure = 0.0;
  double K = 0.0;        // max over arcs and levels <= N of |dM_n|^2
  double sigma2 = 0.0;
  double bound = 0.0;    // (R + K)^2 / sigma2
  bool holds = false;
};

// Upper-tail bound for the survivor measure: m(A(R,N)) <= (R+K)^2 / sigma(N)^2
// with K the max squared increment. Exact enumeration at desk scale.
inline KolmogorovReport kolmogorov_bound_check(const MartingaleState& s, double R, int N) {
  SurvivorReport sr = survivor_measure(s, R, N);
  KolmogorovReport rep;
  rep.measure = to_double(sr.measure);
  // K maximizes over every arc at every level, not just surviving ones.
  double max_inc = 0.0;
  for (int n = 1; n <= N; ++n) {
    long cn = level_arc_count(s.nu, n);
    for (long i = 0; i < cn; ++i) {
      NuAdicArc arc(s.nu, n, mpz_class(static_cast<long>(i)));
      Complex d = martingale_value(s, n, arc) -
                  martingale_value(s, n - 1, arc.parent());
      max_inc = std::max(max_inc, std::abs(d));
    }
  }
  rep.K = max_inc * max_inc;
  rep.sigma2 = sigma2_closed_form(s, N);
  rep.bound = (R + rep.K) * (R + rep.K) / rep.sigma2;
  rep.holds = rep.measure <= rep.bound + 1e-12;
  return rep;
}

}  // namespace ibp

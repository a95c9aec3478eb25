#pragma once

// Randomized invariant suites for the circle-dynamics layer: arc expansion,
// oscillation of coefficient sums over short arcs, quasi-constancy of iterated
// derivatives, and Schwarz monotonicity of interior iterates. Each check
// measures the quantity on random inputs and compares against the explicit
// (non-sharp, geometric-series) constant; the runner reports worst margins.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "ibp/blaschke.hpp"
#include "ibp/lift.hpp"

namespace ibp {

// 2 pi K / (K - 1): geometric-sum constant for oscillation of sums
// sum a_n f^n over an arc whose N-th image has measure <= delta. Each term
// moves by at most 2 pi m(f^n(I)) and m(f^n(I)) <= K^{n-N} m(f^N(I)).
inline double oscillation_constant(const BlaschkeProduct& f) {
  double K = f.constants().K_min;
  return kTwoPi * K / (K - 1.0);
}

// exp(2 pi C2 K / ((K-1) K)): bound on |(f^n)'(xi)| / |(f^n)'(xi')| over an
// arc whose n-th image has measure <= 1. log-ratio telescopes over levels k
// with per-level bound C2 * 2 pi m(f^k(I)) / K_min, and the image measures
// are summable by expansion.
inline double quasiconstancy_constant(const BlaschkeProduct& f) {
  const IterateConstants& c = f.constants();
  double K = c.K_min;
  return std::exp(kTwoPi * c.C2_max / (K - 1.0));
}

struct InvariantCheck {
  std::string name;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();  // bound - measured
  long trials = 0;
};

struct InvariantReport {
  std::vector<InvariantCheck> checks;
  bool all_pass() const {
    for (const InvariantCheck& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Expansion: m(f(I)) >= K_min m(I) whenever the image is not the whole circle.
inline InvariantCheck check_expansion(const BlaschkeProduct& f, int trials,
                                      std::mt19937_64& rng) {
  InvariantCheck out{"expansion", true,
                     std::numeric_limits<double>::infinity(), trials};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double K = f.constants().K_min;
  for (int i = 0; i < trials; ++i) {
    Arc I(u(rng), 1e-5 + 0.02 * u(rng));
    double v = image_arc_measure(f, 1, I);
    if (v >= 1.0) continue;
    double margin = v - K * I.length;
    out.worst_margin = std::min(out.worst_margin, margin);
    if (margin < -1e-10) out.pass = false;
  }
  return out;
}

// Oscillation: random coefficients on [1, N], random arc I with
// m(f^N(I)) <= delta; sup over sampled xi, xi' of |sum a_n (f^n(xi)-f^n(xi'))|
// must stay below oscillation_constant(f) * delta * max |a_n|.
inline InvariantCheck check_oscillation(const BlaschkeProduct& f, int trials,
                                        std::mt19937_64& rng) {
  InvariantCheck out{"oscillation", true,
                     std::numeric_limits<double>::infinity(), trials};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(2, 7);
  double c = oscillation_constant(f);
  for (int i = 0; i < trials; ++i) {
    int N = len(rng);
    std::vector<Complex> a(N + 1);
    double amax = 0.0;
    for (int n = 1; n <= N; ++n) {
      a[n] = Complex(2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0);
      amax = std::max(amax, std::abs(a[n]));
    }
    double delta = 0.02 + 0.3 * u(rng);
    // Shrink a random arc until its N-th image measures at most delta.
    Arc I(u(rng), 0.25);
    while (image_arc_measure(f, N, I) > delta) I = Arc(I.start, I.length / 2.0);
    double worst = 0.0;
    const int S = 16;
    std::vector<Complex> sums(S);
    for (int s = 0; s < S; ++s) {
      double t = I.start.value + I.length * (s + 0.5) / S;
      Complex z = unit(t), acc = 0.0;
      for (int n = 1; n <= N; ++n) {
        z = f.evaluate(z);
        z /= std::abs(z);
        acc += a[n] * z;
      }
      sums[s] = acc;
    }
    for (int s = 0; s < S; ++s)
      for (int t = s + 1; t < S; ++t)
        worst = std::max(worst, std::abs(sums[s] - sums[t]));
    double margin = c * delta * amax - worst;
    out.worst_margin = std::min(out.worst_margin, margin);
    if (margin < 0.0) out.pass = false;
  }
  return out;
}

// Quasi-constancy: |(f^n)'| ratios over an arc with m(f^n(I)) <= 1 stay below
// the explicit exponential constant.
inline InvariantCheck check_quasiconstancy(const BlaschkeProduct& f, int trials,
                                           std::mt19937_64& rng) {
  InvariantCheck out{"derivative quasi-constancy", true,
                     std::numeric_limits<double>::infinity(), trials};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 6);
  double bound = quasiconstancy_constant(f);
  for (int i = 0; i < trials; ++i) {
    int n = len(rng);
    Arc I(u(rng), 0.2);
    while (image_arc_measure(f, n, I) >= 1.0) I = Arc(I.start, I.length / 2.0);
    const int S = 12;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int s = 0; s < S; ++s) {
      double t = I.start.value + I.length * (s + 0.5) / S;
      double d = 1.0;
      Turn cur(t);
      for (int k = 0; k < n; ++k) {
        d *= f.derivative_modulus_on_circle(cur);
        cur = f.boundary_angle(cur);
      }
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    double margin = bound - hi / lo;
    out.worst_margin = std::min(out.worst_margin, margin);
    if (margin < 0.0) out.pass = false;
  }
  return out;
}

// Schwarz: |f^{n+1}(z)| <= |f^n(z)| for interior points.
inline InvariantCheck check_schwarz(const BlaschkeProduct& f, int trials,
                                    std::mt19937_64& rng) {
  InvariantCheck out{"schwarz monotonicity", true,
                     std::numeric_limits<double>::infinity(), trials};
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int i = 0; i < trials; ++i) {
    Complex z(u(rng), u(rng));
    double prev = std::abs(z);
    for (int n = 1; n <= 6; ++n) {
      z = f.evaluate(z);
      double cur = std::abs(z);
      double margin = prev - cur;
      out.worst_margin = std::min(out.worst_margin, margin);
      if (margin < -1e-12) out.pass = false;
      prev = cur;
    }
  }
  return out;
}

inline InvariantReport run_invariant_suites(const BlaschkeProduct& f, int trials,
                                            unsigned long seed) {
  if (f.is_rotation())
    throw std::invalid_argument("invariant suites need an expanding map (not a rotation)");
  std::mt19937_64 rng(seed);
  InvariantReport rep;
  rep.checks.push_back(check_expansion(f, trials, rng));
  rep.checks.push_back(check_oscillation(f, trials, rng));
  rep.checks.push_back(check_quasiconstancy(f, trials, rng));
  rep.checks.push_back(check_schwarz(f, trials, rng));
  return rep;
}

}  // namespace ibp

#pragma once

// Gauge (measure) functions phi with psi(t) = phi(t)/t and the generalized
// inverse of psi. Supported kinds: pure powers phi = t^s, power-log
// phi = t^s * log(e/t)^p, and user tables on a logarithmic grid.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibp {

enum class GaugeKind { power, power_log, table };

struct GaugeFunction {
  GaugeKind kind = GaugeKind::power;
  double s = 1.0;  // power exponent, in (0,1]
  double p = 0.0;  // log exponent (power_log only)
  // Table rows (t, phi(t)) with t strictly decreasing on a log grid.
  std::vector<std::pair<double, double>> table;

  static GaugeFunction power(double s) {
    if (!(s > 0.0) || s > 1.0)
      throw std::invalid_argument("gauge power exponent must lie in (0,1]");
    GaugeFunction g;
    g.kind = GaugeKind::power;
    g.s = s;
    return g;
  }

  static GaugeFunction power_log(double s, double p) {
    if (!(s > 0.0) || s > 1.0)
      throw std::invalid_argument("gauge power exponent must lie in (0,1]");
    GaugeFunction g;
    g.kind = GaugeKind::power_log;
    g.s = s;
    g.p = p;
    return g;
  }

  static GaugeFunction from_table(std::vector<std::pair<double, double>> rows) {
    if (rows.size() < 3)
      throw std::invalid_argument("gauge table needs at least 3 rows");
    GaugeFunction g;
    g.kind = GaugeKind::table;
    g.table = std::move(rows);
    for (size_t i = 0; i + 1 < g.table.size(); ++i) {
      if (!(g.table[i].first > g.table[i + 1].first) ||
          !(g.table[i].second > g.table[i + 1].second))
        throw std::invalid_argument("gauge table must be strictly decreasing in t and phi");
    }
    return g;
  }

  double phi(double t) const {
    if (!(t > 0.0)) return 0.0;
    if (t > 1.0) t = 1.0;
    switch (kind) {
      case GaugeKind::power:
        return std::pow(t, s);
      case GaugeKind::power_log:
        return std::pow(t, s) * std::pow(std::log(std::exp(1.0) / t), p);
      case GaugeKind::table: {
        // Log-log linear interpolation; extrapolate with the end slopes.
        if (t >= table.front().first) return table.front().second;
        size_t hi = table.size() - 1;
        for (size_t i = 1; i < table.size(); ++i) {
          if (t >= table[i].first) { hi = i; break; }
        }
        const auto& [t1, f1] = table[hi - 1];
        const auto& [t0, f0] = table[hi];
        double u = (std::log(t) - std::log(t0)) / (std::log(t1) - std::log(t0));
        if (t < table.back().first) {  // extrapolate below the grid
          u = (std::log(t) - std::log(t0)) / (std::log(t1) - std::log(t0));
        }
        return std::exp(std::log(f0) + u * (std::log(f1) - std::log(f0)));
      }
    }
    return 0.0;
  }

  double psi(double t) const { return phi(t) / t; }

  // psi -> infinity as t -> 0 (fails exactly for the pure power with s = 1).
  bool psi_unbounded() const {
    if (kind == GaugeKind::power) return s < 1.0;
    if (kind == GaugeKind::power_log) return s < 1.0 || p > 0.0;
    return psi(1e-15) > 10.0 * psi(table.front().first);
  }
};

namespace gauge_detail {

inline void require_psi_monotone(const GaugeFunction& g) {
  double prev = g.psi(1e-16);
  for (double t = 1e-15; t <= 1.0; t *= 10.0) {
    double cur = g.psi(t);
    if (cur > prev * (1.0 + 1e-9))
      throw std::invalid_argument("gauge: psi is not nonincreasing on the probe grid");
    prev = cur;
  }
}

}  // namespace gauge_detail

// Generalized inverse of the nonincreasing psi: the crossing point
// inf{s > 0 : psi(s) < t} (equivalently sup{s : psi(s) > t}), computed by
// bisection on the bracket [1e-300, 1]. For phi = t^{1-delta} this equals
// t^{-1/delta} whenever that value lies inside the bracket.
inline double psi_generalized_inverse(const GaugeFunction& g, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("psi inverse: t must be positive");
  gauge_detail::require_psi_monotone(g);
  if (g.kind == GaugeKind::power) {
    double delta = 1.0 - g.s;
    if (delta == 0.0) return 1e-300;          // psi constant 1: bracket infimum
    double v = std::pow(t, -1.0 / delta);
    return std::min(1.0, std::max(1e-300, v));
  }
  double lo = 1e-300, hi = 1.0;
  if (g.psi(lo) <= t) return lo;  // psi below t everywhere: bracket infimum
  if (g.psi(hi) > t) return hi;   // psi above t everywhere: bracket supremum
  for (int it = 0; it < 400; ++it) {
    double mid = std::sqrt(lo * hi);  // geometric bisection on a log scale
    if (g.psi(mid) > t)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace ibp

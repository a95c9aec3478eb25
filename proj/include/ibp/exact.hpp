#pragma once

// Exact rational angle arithmetic (GMP): turn coordinates as mpq_class in
// [0,1), exact arcs, and the angle dynamics of the monomial maps z -> z^nu,
// for which t -> nu * t (mod 1) never grows denominators and deep iterates
// reduce to modular exponentiation.

#include <gmpxx.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "ibp/circle.hpp"

namespace ibp {

using Rational = mpq_class;

inline Rational rational_frac(const Rational& t) {
  mpz_class fl;
  mpz_fdiv_q(fl.get_mpz_t(), t.get_num().get_mpz_t(), t.get_den().get_mpz_t());
  Rational r = t - Rational(fl);
  return r;
}

inline double to_double(const Rational& q) { return q.get_d(); }

// e^{2 pi i t} for an exact turn t; only the fractional part matters and the
// conversion to double costs at most one ulp of angle.
inline Complex unit(const Rational& t) { return unit(to_double(rational_frac(t))); }

// Exact closed arc [start, start + length] in turns; length in (0, 1].
struct ExactArc {
  Rational start;   // reduced into [0,1)
  Rational length;  // in (0,1]

  ExactArc() : start(0), length(1) {}
  ExactArc(Rational s, Rational len)
      : start(rational_frac(s)), length(std::move(len)) {
    if (!(length > 0) || length > 1)
      throw std::invalid_argument("ExactArc: length must lie in (0,1]");
  }

  bool full_circle() const { return length == 1; }
  Rational midpoint() const { return rational_frac(start + length / 2); }
  Arc to_arc() const {
    return Arc(Turn(to_double(start)), std::min(1.0, to_double(length)));
  }
  bool contains(const Rational& t) const {
    if (full_circle()) return true;
    Rational rel = rational_frac(t - start);
    return rel <= length;
  }
};

// frac(nu^n * t) for t = p/q, via nu^n mod q: exact at any depth n.
inline Rational monomial_iterate_turn(int nu, long n, const Rational& t) {
  if (n < 0) throw std::invalid_argument("monomial_iterate_turn: n >= 0 required");
  Rational r = rational_frac(t);
  const mpz_class& q = r.get_den();
  if (q == 1) return Rational(0);
  mpz_class e;
  mpz_class base(nu), exp(n);
  mpz_powm(e.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), q.get_mpz_t());
  mpz_class num = (r.get_num() * e) % q;
  Rational out(num, q);
  out.canonicalize();
  return out;
}

// m(f^n(I)) for f = z^nu: min(1, nu^n * length), exact.
inline Rational monomial_image_measure(int nu, long n, const Rational& length) {
  // Compare nu^n against 1/length without constructing nu^n when huge.
  Rational inv = 1 / length;
  double need_bits = mpz_sizeinbase(inv.get_num().get_mpz_t(), 2) -
                     mpz_sizeinbase(inv.get_den().get_mpz_t(), 2) + 2;
  double have_bits = static_cast<double>(n) * std::log2(static_cast<double>(nu));
  if (have_bits > need_bits + 2) return Rational(1);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), nu, static_cast<unsigned long>(n));
  Rational v = Rational(scale) * length;
  return v >= 1 ? Rational(1) : v;
}

// Average of z over an exact arc: e^{2 pi i mid} * sin(pi L)/(pi L).
// (The endpoint form (-i/2pi)(z_+ - z_-)/L factors this way.)
inline Complex exact_arc_average_z(const ExactArc& I) {
  double L = to_double(I.length);
  if (L >= 1.0) return Complex(0.0, 0.0);
  double modulus = std::sin(std::numbers::pi * L) / (std::numbers::pi * L);
  return unit(I.midpoint()) * modulus;
}

}  // namespace ibp

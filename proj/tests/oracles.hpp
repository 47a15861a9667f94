#pragma once

// Reference computations that share no code with the library: closed forms,
// adaptive Simpson quadrature and brute-force searches.

#include "rieszlab/core.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

/// Volume of B_{r/2}(0) ∩ B_{r/2}(x) with |x| = t, d <= 3.
inline double lens(int d, double r, double t) {
  const double a = 0.5 * r;
  if (t >= r) return 0.0;
  switch (d) {
    case 1:
      return r - t;
    case 2:
      return 2.0 * a * a * std::acos(t / (2.0 * a)) - 0.5 * t * std::sqrt(4.0 * a * a - t * t);
    case 3:
      return kPi * (4.0 * a + t) * (2.0 * a - t) * (2.0 * a - t) / 12.0;
    default:
      return std::nan("");
  }
}

/// Adaptive Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12, int depth = 48) {
  struct Rec {
    const std::function<double(double)>& f;
    double run(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) const {
      const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double diff = left + right - whole;
      if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
      return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  } rec{f};
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec.run(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// ∫_a^b |x - p|^{-s} dx in closed form (1D).
inline double segment_potential(double s, double a, double b, double p) {
  auto F = [s](double u) { return std::pow(u, 1.0 - s) / (1.0 - s); };
  if (p <= a) return F(b - p) - F(a - p);
  if (p >= b) return F(p - a) - F(p - b);
  return F(p - a) + F(b - p);
}

/// ∫_{[a,b]} ∫_{[c,e]} |x - y|^{-s} for disjoint or identical intervals (1D).
inline double segment_pair(double s, double a, double b, double c, double e) {
  auto G = [s](double u) { return std::pow(std::abs(u), 2.0 - s) / ((1.0 - s) * (2.0 - s)); };
  // ∫∫ |x-y|^{-s} = G(b-c) - G(b-e) - G(a-c) + G(a-e) up to sign convention for ordered intervals
  return -(G(b - e) - G(b - c) - G(a - e) + G(a - c));
}

inline rieszlab::Vec vec(std::initializer_list<double> xs) {
  rieszlab::Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline rieszlab::Vec random_point(std::mt19937_64& rng, int d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  rieszlab::Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = u(rng);
  return v;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace oracle

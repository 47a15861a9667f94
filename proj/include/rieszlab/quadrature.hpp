#pragma once

// Thin wrappers over Boost.Math quadrature plus fixed Gauss-Legendre rules.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <vector>

namespace rieszlab::quad {

namespace detail {

// Boost 1.74 compares the error of the [-1, 1]-mapped rule against a tolerance in
// the original variable, so narrow intervals never terminate. We keep its rule and
// do the bisection here with the error rescaled by the half-width.
template <class F>
double gk_rule(F& f, double a, double b, double* err) {
  double e = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &e);
  *err = e * 0.5 * std::abs(b - a);
  return v;
}

template <class F>
double gk_adapt(F& f, double a, double b, double whole, double e, double rel_tol, double abs_tol, int depth,
                double* err_sum) {
  if (depth == 0 || e <= abs_tol || e <= rel_tol * std::abs(whole)) {
    *err_sum += e;
    return whole;
  }
  const double m = 0.5 * (a + b);
  double el = 0.0, er = 0.0;
  const double l = gk_rule(f, a, m, &el);
  const double r = gk_rule(f, m, b, &er);
  return gk_adapt(f, a, m, l, el, rel_tol, 0.5 * abs_tol, depth - 1, err_sum) +
         gk_adapt(f, m, b, r, er, rel_tol, 0.5 * abs_tol, depth - 1, err_sum);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (15 point) on [a, b].
template <class F>
double gk(F&& f, double a, double b, double rel_tol = 1e-13, double* err = nullptr) {
  if (a == b) return 0.0;
  double e = 0.0, total_err = 0.0;
  const double whole = detail::gk_rule(f, a, b, &e);
  const double v = detail::gk_adapt(f, a, b, whole, e, rel_tol, rel_tol * std::abs(whole), 20, &total_err);
  if (err) *err = total_err;
  return v;
}

/// Tanh-sinh on [a, b]; tolerates integrable endpoint singularities.
template <class F>
double tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-13, double* err = nullptr) {
  if (a == b) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
  double e = 0.0;
  double v = integrator.integrate(f, a, b, rel_tol, &e);
  if (err) *err = e;
  return v;
}

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Supported orders: 8, 16, 20, 32.
const GaussRule& gauss_legendre(int n);

}  // namespace rieszlab::quad

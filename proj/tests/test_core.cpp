#include "doctest.h"
#include "oracles.hpp"

#include "rieszlab/core.hpp"
#include "rieszlab/parallel.hpp"
#include "rieszlab/quadrature.hpp"

#include <atomic>
#include <cmath>
#include <random>

using namespace rieszlab;
using oracle::vec;

TEST_SUITE("core") {

TEST_CASE("dimensional constants") {
  CHECK(sphere_area(1) == doctest::Approx(2.0));
  CHECK(sphere_area(2) == doctest::Approx(2.0 * oracle::kPi));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * oracle::kPi));
  CHECK(ball_volume(1) == doctest::Approx(2.0));
  CHECK(ball_volume(2) == doctest::Approx(oracle::kPi));
  CHECK(ball_volume(3) == doctest::Approx(4.0 * oracle::kPi / 3.0));
}

TEST_CASE("kernel evaluation") {
  CHECK(kernel_eval(RieszKernel(2.0, 3), vec({0, 0, 0}), vec({1, 0, 0})) == 1.0);
  CHECK(kernel_eval(RieszKernel(1.0, 3), vec({0, 0, 0}), vec({0, 2, 0})) == 0.5);
  CHECK_THROWS_AS(kernel_eval(RieszKernel(0.5, 1), vec({0}), vec({0})), SingularPairError);
  CHECK_THROWS_AS(RieszKernel(3.0, 3), ParameterError);
  CHECK_THROWS_AS(RieszKernel(0.0, 2), ParameterError);

  std::mt19937_64 rng(11);
  const RieszKernel k(1.3, 3);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = oracle::random_point(rng, 3, -2, 2), y = oracle::random_point(rng, 3, -2, 2);
    REQUIRE(k(x, y) == k(y, x));
  }
  // strictly decreasing radial profile
  for (double r = 0.1; r < 5.0; r += 0.1) CHECK(k.radial(r + 0.05) < k.radial(r));
}

TEST_CASE("kernel truncation") {
  const TruncatedKernel t = kernel_truncate(RieszKernel(1.0, 3), 0.5);
  CHECK(t.capped(0.25) == doctest::Approx(2.0));
  CHECK(t.capped(1.0) == doctest::Approx(1.0));
  CHECK(t.remainder(1.0) == 0.0);
  CHECK_THROWS_AS(kernel_truncate(RieszKernel(1.0, 3), 0.0), ParameterError);
  CHECK_THROWS_AS(kernel_truncate(RieszKernel(1.0, 3), -1.0), ParameterError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-3, 3.0);
  for (double s : {0.5, 1.0, 2.2}) {
    const TruncatedKernel tk = kernel_truncate(RieszKernel(s, 3), 0.7);
    for (int i = 0; i < 10000; ++i) {
      const double r = u(rng);
      const double c = std::pow(r, -s);
      REQUIRE(std::abs(tk.capped(r) + tk.remainder(r) - c) <= 4e-16 * c);
      REQUIRE(tk.remainder(r) >= 0.0);
    }
  }
}

TEST_CASE("regularized kernel weight matches the lens-volume normalization") {
  // K is fixed by ∫_1^∞ h_r(1) K r^{-s-d-1} dr = 1.
  for (int d = 1; d <= 3; ++d)
    for (double s : {0.3, 0.5 * d, d - 0.2}) {
      if (!(s > 0.0 && s < d)) continue;
      const RieszKernel k(s, d);
      // r = w^{-1/s} makes the integrand bounded on (0, 1]
      const double I = oracle::simpson(
          [&](double w) {
            // lens(r) / r^d is smooth in r; cap r where it has converged
            const double r = std::min(std::pow(std::max(w, 1e-300), -1.0 / s), 1e100);
            return oracle::lens(d, r, 1.0) / std::pow(r, d) / s;
          },
          0.0, 1.0, 1e-14);
      CHECK(oracle::rel_err(hs_weight_coefficient(k), 1.0 / I) < 1e-8);
    }
}

TEST_CASE("regularized kernel") {
  const RieszKernel k1(0.5, 1);
  CHECK(oracle::rel_err(hs_regularize(k1, 0.0, 1.0), 1.0) < 1e-8);
  for (int d = 1; d <= 3; ++d)
    for (double s : {0.4, d - 0.3}) {
      const RieszKernel k(s, d);
      for (double t : {0.6, 1.0, 2.5}) CHECK(oracle::rel_err(hs_regularize(k, 0.5, t), std::pow(t, -s)) < 1e-9);
      // below alpha: direct integration of the representation with the closed-form lens
      const double K = hs_weight_coefficient(k);
      for (double t : {0.05, 0.2}) {
        const double alpha = 0.5;
        const double direct = oracle::simpson(
            [&](double w) {
              const double r = std::min(alpha * std::pow(std::max(w, 1e-300), -1.0 / s), 1e100);
              return oracle::lens(d, r, t) / std::pow(r, d) * K * std::pow(alpha, -s) / s;
            },
            0.0, 1.0, 1e-14);
        CHECK(oracle::rel_err(hs_regularize(k, alpha, t), direct) < 1e-7);
      }
    }
  // monotone in alpha and bounded by c
  const RieszKernel k(1.0, 3);
  for (double t : {0.05, 0.2, 0.4}) {
    double prev = std::pow(t, -1.0);
    for (double alpha = 0.0; alpha <= 1.0; alpha += 0.05) {
      const double v = hs_regularize(k, alpha, t);
      CHECK(v <= prev * (1.0 + 1e-12));
      prev = v;
    }
  }
  CHECK(hs_regularize(k, 0.1, 0.05) >= hs_regularize(k, 0.2, 0.1 / 2.0 * 2.0));
  CHECK_THROWS_AS(hs_regularize(k, -1.0, 0.5), ParameterError);
  CHECK_THROWS_AS(hs_regularize(k, 0.0, 0.0), SingularPairError);
}

TEST_CASE("normalization constant") {
  CHECK(c_sd(0.0, 2) == doctest::Approx(2.0 * oracle::kPi));
  CHECK(c_sd(1.0, 3) == doctest::Approx(4.0 * oracle::kPi));
  CHECK(c_sd(2.0, 3) == doctest::Approx(8.0 * oracle::kPi * oracle::kPi));
  CHECK_THROWS_AS(c_sd(0.5, 3), UnsupportedError);
}

TEST_CASE("Fourier transform constant") {
  // d = 1: 2 Γ(1-s) sin(π s / 2); d = 3, s = 1: 4π
  for (double s : {0.2, 0.5, 0.8})
    CHECK(oracle::rel_err(fourier_constant(RieszKernel(s, 1)), 2.0 * std::tgamma(1.0 - s) * std::sin(oracle::kPi * s / 2.0)) < 1e-13);
  CHECK(oracle::rel_err(fourier_constant(RieszKernel(1.0, 3)), 4.0 * oracle::kPi) < 1e-13);
  CHECK(oracle::rel_err(fourier_constant(RieszKernel(1.0, 2)), 2.0 * oracle::kPi) < 1e-13);
}

TEST_CASE("cube domain conventions") {
  const CubeDomain K = CubeDomain::centered(2, 2.0);
  CHECK(K.volume() == 4.0);
  CHECK(K.contains(vec({-1.0, -1.0})));
  CHECK_FALSE(K.contains(vec({1.0, 0.0})));
  CHECK(K.contains_closed(vec({1.0, 0.0})));
  const CubeDomain L = CubeDomain::from_lower(vec({0.0, 0.0}), 1.0);
  CHECK(L.center[0] == 0.5);
  CHECK(L.translated(vec({1.0, 2.0})).center[1] == 2.5);
  CHECK_THROWS_AS(CubeDomain(vec({0.0}), 0.0), ParameterError);
  UniformMeasure mu{CubeDomain::centered(3, 2.0), 0.5};
  CHECK(mu.mass() == 4.0);
}

TEST_CASE("point configurations") {
  PointConfiguration c(2, {0, 0, 3, 4, 0, 1});
  CHECK(c.size() == 3);
  CHECK(c.min_separation() == 1.0);
  CHECK(std::isinf(PointConfiguration(2).min_separation()));
  CHECK(c.barycenter_sum()[0] == 3.0);

  PeriodicConfiguration p;
  p.cell = CubeDomain::centered(1, 2.0);
  p.base_points = PointConfiguration(1, {-0.5, 0.5});
  p.zero_barycenter = true;
  CHECK_NOTHROW(p.validate());
  p.base_points = PointConfiguration(1, {-0.5, 0.6});
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.zero_barycenter = false;
  CHECK_NOTHROW(p.validate());
  p.base_points = PointConfiguration(1, {-0.5});
  CHECK_THROWS_AS(p.validate(), ParameterError);
  CHECK_NOTHROW(p.validate(false));
}

TEST_CASE("digest helpers") {
  CHECK(hex64(fnv1a64(std::string())) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64(std::string("a"))) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a64(std::string("foobar"))) == "85944171f73967e8");
}

TEST_CASE("adaptive quadrature terminates on narrow intervals") {
  for (double w : {1.0, 5e-3, 1e-8}) {
    long calls = 0;
    const double v = quad::gk([&](double x) { ++calls; return 0.37 + 0.1 * x; }, 0.0, w);
    CHECK(oracle::rel_err(v, 0.37 * w + 0.05 * w * w) < 1e-14);
    CHECK(calls < 100);
  }
  // a kink forces refinement but stays accurate
  const double v = quad::gk([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-12);
  CHECK(oracle::rel_err(v, 0.5 * (0.09 + 0.49)) < 1e-11);
}

TEST_CASE("parallel loop is thread-count independent") {
  std::vector<double> a(1000), b(1000);
  auto f = [](std::size_t i) { return std::sin(static_cast<double>(i)) * std::exp(-1e-3 * i); };
  set_max_threads(1);
  parallel_for(a.size(), [&](std::size_t i) { a[i] = f(i); });
  set_max_threads(4);
  parallel_for(b.size(), [&](std::size_t i) { b[i] = f(i); });
  CHECK(a == b);
  std::atomic<int> count{0};
  CHECK_THROWS_AS(parallel_for(10, [&](std::size_t i) {
                    ++count;
                    if (i == 3) throw DomainError("boom");
                  }),
                  DomainError);
  CHECK(count == 10);
  set_max_threads(0);
}

}  // TEST_SUITE

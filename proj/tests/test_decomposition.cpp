#include "doctest.h"
#include "oracles.hpp"

#include "rieszlab/decomposition.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace rieszlab;
using oracle::vec;

namespace {

/// O(n²) disjointness and containment check, sharing nothing with the library's grids.
bool brute_disjoint(const std::vector<Ball>& balls) {
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i + 1; j < balls.size(); ++j)
      if ((balls[i].center - balls[j].center).norm() <= balls[i].radius + balls[j].radius) return false;
  return true;
}

bool brute_contained(const CubeDomain& Q, const std::vector<Ball>& balls) {
  for (const Ball& b : balls)
    for (int a = 0; a < Q.dim(); ++a)
      if (b.center[a] - b.radius < Q.lo(a) || b.center[a] + b.radius > Q.hi(a)) return false;
  return true;
}

}  // namespace

TEST_SUITE("decomposition") {

TEST_CASE("packing constants") {
  CHECK(cheese_constant(2) == doctest::Approx(8.0 / oracle::kPi));
  CHECK(cheese_constant(3) == doctest::Approx(16.0 / (4.0 * oracle::kPi / 3.0)));
  CHECK(cheese_ladder_factor(2) == doctest::Approx(1.0 + 4.0 * std::sqrt(2.0) * oracle::kPi));
  const double side = cheese_min_side(2, {1.0, 19.0});
  CHECK(side == doctest::Approx(8.0 * std::sqrt(2.0) * oracle::kPi * (2.0 + 8.0 / oracle::kPi) * 19.0));
  CHECK(side < 3072.0);
  CHECK(decomposition_constant(2) == doctest::Approx(8.0 * std::sqrt(2.0) * oracle::kPi));
}

TEST_CASE("ladder and cube hypotheses are enforced") {
  const CubeDomain Q = CubeDomain::from_lower(vec({0.0, 0.0}), 4000.0);
  CHECK_THROWS_AS(swiss_cheese(Q, {1.0, 2.0}), ParameterError);
  CHECK_THROWS_AS(swiss_cheese(Q, {}), ParameterError);
  CHECK_THROWS_AS(swiss_cheese(Q, {-1.0}), ParameterError);
  CHECK_THROWS_AS(swiss_cheese(CubeDomain::from_lower(vec({0.0, 0.0}), 100.0), {1.0}), ParameterError);
  CHECK_THROWS_AS(swiss_cheese(CubeDomain::from_lower(vec({0.0}), 1000.0), {1.0}), ParameterError);
}

TEST_CASE("single-family packing lands in the density window") {
  const CubeDomain Q = CubeDomain::from_lower(vec({0.0, 0.0}), 127.0);
  const BallPacking P = swiss_cheese(Q, {1.0});
  const double lo = 1.0 / (2.0 + 8.0 / oracle::kPi), hi = 1.0 / (1.0 + 8.0 / oracle::kPi);
  CHECK(P.certificate.window_lo == doctest::Approx(lo));
  CHECK(P.certificate.window_hi == doctest::Approx(hi));
  CHECK(P.certificate.passed());
  CHECK(brute_disjoint(P.balls));
  CHECK(brute_contained(Q, P.balls));
  const double density = P.balls.size() * oracle::kPi / Q.volume();
  CHECK(density > lo);
  CHECK(density < hi);
  CHECK(verify_packing(Q, P.ladder, P.balls).passed());

  // the verifier catches tampering
  std::vector<Ball> broken = P.balls;
  broken[1].center = broken[0].center;
  CHECK_FALSE(verify_packing(Q, P.ladder, broken).disjoint);
  broken = P.balls;
  broken[0].center[0] = 0.5;
  CHECK_FALSE(verify_packing(Q, P.ladder, broken).contained);
  broken = P.balls;
  broken.resize(broken.size() / 2);
  CHECK_FALSE(verify_packing(Q, P.ladder, broken).density_window);

  const BallPacking again = swiss_cheese(Q, {1.0});
  CHECK(again.digest() == P.digest());
}

TEST_CASE("two-family regression packing") {
  const CubeDomain Q = CubeDomain::from_lower(vec({0.0, 0.0}), 3072.0);
  SwissCheeseOptions opts;
  opts.seed = 1;
  const BallPacking P = swiss_cheese(Q, {1.0, 19.0}, opts);
  CHECK(hex64(P.digest()) == "d04d33c8ca25c032");
  REQUIRE(P.counts.size() == 2);
  CHECK(P.counts[0] == 601158);
  CHECK(P.counts[1] == 1665);
  CHECK(P.certificate.passed());
  CHECK(P.certificate.densities[0] == doctest::Approx(0.200123).epsilon(1e-5));
  CHECK(P.certificate.densities[1] == doctest::Approx(0.200092).epsilon(1e-5));
}

TEST_CASE("decomposition parameters") {
  const DecompositionParams p = fg_parameters(1000000, 2000000, 2);
  const double C = 8.0 * std::sqrt(2.0) * oracle::kPi;
  CHECK(p.C == doctest::Approx(C));
  CHECK(p.M_formula == static_cast<int>(std::floor(std::log(1e6) / (18.0 * 6.0 * std::log(C)))) - 1);
  CHECK(p.M == 1);
  CHECK(p.clamped);
  CHECK(p.l == doctest::Approx(std::pow(1e6, 1.0 / 12.0)));
  REQUIRE(p.ladder.size() == 1);
  CHECK(p.ladder[0] == doctest::Approx(std::pow(1e6, 1.0 / 18.0)));
  CHECK_FALSE(p.feasible);
  CHECK_FALSE(p.warnings.empty());
  int prev = 0;
  for (long n = 2; n < std::numeric_limits<long>::max() / 37; n *= 37) {
    const DecompositionParams q = fg_parameters(n, n, 3);
    CHECK(q.M >= prev);
    CHECK(q.M >= 1);
    prev = q.M;
  }
  CHECK_THROWS_AS(fg_parameters(0, 5, 2), ParameterError);
  CHECK_THROWS_AS(fg_parameters(5, 5, 1), ParameterError);
}

TEST_CASE("bump density") {
  for (double kappa : {0.5, 0.25}) {
    const double mass = oracle::simpson([&](double t) { return bump_density(t, kappa); }, 1.0 - kappa, 1.0 + kappa, 1e-13);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(bump_density(1.0 + kappa, kappa) == 0.0);
    CHECK(bump_density(1.0 - 0.9 * kappa, kappa) == doctest::Approx(bump_density(1.0 + 0.9 * kappa, kappa)));
  }
}

TEST_CASE("localized energy split") {
  const RieszKernel k(1.0, 2);
  const CubeDomain Q = CubeDomain::from_lower(vec({0.0, 0.0}), 127.0);
  const BallPacking P = swiss_cheese(Q, {1.0});
  FgSplitOptions opts;
  opts.samples = 2000;
  opts.seed = 7;
  const PointConfiguration config(2, {0.3, 0.4, 1.7, 2.2, 2.5, 0.9, 0.8, 2.8});
  const FgSplitResult r = fg_energy_split(k, config, P, opts);
  CHECK(r.within(3.0));
  CHECK(r.localized > 0.0);
  CHECK(r.residual == doctest::Approx(r.full - r.localized));
  CHECK(r.weight == doctest::Approx(1.0 / (1.0 + decomposition_constant(2))));
  const FgSplitResult again = fg_energy_split(k, config, P, opts);
  CHECK(again.localized == r.localized);

  // exact expectation: a pair at distance δ shares one of n balls of radius t with
  // probability n |B_t ∩ (B_t + δ)| / (l t)^2, averaged over the bump in t
  auto bump = [](double t) {
    const double u = (t - 1.0) / 0.5;
    return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
  };
  const double z_bump = oracle::simpson(bump, 0.5, 1.5, 1e-14);
  double exact = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (i == j) continue;
      const double delta = (config.point(i) - config.point(j)).norm();
      const double lo = std::max(0.5, 0.5 * delta);
      if (lo >= 1.5) continue;
      exact += k(config.point(i), config.point(j)) *
               oracle::simpson(
                   [&](double t) {
                     return bump(t) / z_bump * static_cast<double>(P.balls.size()) * oracle::lens(2, 2.0 * t, delta) /
                            std::pow(127.0 * t, 2);
                   },
                   lo, 1.5, 1e-15);
    }
  CHECK(oracle::rel_err(r.localized_exact, r.weight * exact) < 1e-7);

  // points farther apart than every dilated diameter never share a ball
  const PointConfiguration far(2, {0.0, 0.0, 5.0, 0.0});
  const FgSplitResult z = fg_energy_split(k, far, P, opts);
  CHECK(z.localized == 0.0);
  CHECK(z.localized_exact == 0.0);
  CHECK(z.full == doctest::Approx(0.4));

  FgSplitOptions strict = opts;
  strict.samples = 20;
  strict.max_relative_se = 1e-6;
  CHECK_THROWS_AS(fg_energy_split(k, config, P, strict), AccuracyError);
  FgSplitOptions bad = opts;
  bad.kappa = 0.7;
  CHECK_THROWS_AS(fg_energy_split(k, config, P, bad), ParameterError);
}

TEST_CASE("almost subadditivity of minimal energies") {
  MinimizeOptions opts;
  opts.seed = 5;
  opts.restarts = 4;
  const RieszKernel k(0.5, 1);
  const AlmostSubadditiveReport r = almost_subadditive_check(k, 8, 8, opts);
  CHECK(r.converged);
  CHECK(r.excess == doctest::Approx(r.xi_total - r.xi_1 - r.xi_2));
  CHECK(r.c_add > 0.0);
  CHECK(r.budget == doctest::Approx(r.excess));
  const AlmostSubadditiveReport z = almost_subadditive_check(k, 8, 0, opts);
  CHECK(z.xi_2 == 0.0);
  CHECK(z.c_add == 0.0);
  CHECK_THROWS_AS(almost_subadditive_check(k, 0, 0, opts), ParameterError);
}

}  // TEST_SUITE

#pragma once

#include "rieszlab/core.hpp"
#include "rieszlab/jellium.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rieszlab {

/// 2^{d+1} / |B_1|.
double cheese_constant(int d);
/// 1 + 4 sqrt(d) |B_1|: minimal ratio between consecutive radii.
double cheese_ladder_factor(int d);
/// 8 sqrt(d) |B_1| (M + C_d) r_M: the cube side must exceed this.
double cheese_min_side(int d, const std::vector<double>& ladder);

struct Ball {
  Vec center;
  double radius = 0.0;
  int family = 0;  ///< 0-based index into the ladder
};

struct PackingCertificate {
  bool disjoint = false;
  bool contained = false;
  bool density_window = false;
  std::vector<double> densities;  ///< covered volume fraction per family
  double window_lo = 0.0;         ///< 1 / (M + C_d + 1)
  double window_hi = 0.0;         ///< 1 / (M + C_d)
  bool passed() const { return disjoint && contained && density_window; }
};

struct BallPacking {
  CubeDomain cube;
  std::vector<double> ladder;
  std::vector<Ball> balls;
  std::vector<std::size_t> counts;  ///< balls per family
  std::uint64_t seed = 0;           ///< jitter seed that was accepted
  PackingCertificate certificate;

  /// FNV-1a over centers, radii and families in placement order.
  std::uint64_t digest() const;
  std::string to_json() const;
};

struct SwissCheeseOptions {
  std::uint64_t seed = 1;
  int seed_budget = 16;
};

/// Greedy disjoint packing with per-family densities inside the open window
/// (1/(M+C_d+1), 1/(M+C_d)). Rejects ladders or cubes that violate the hypotheses.
BallPacking swiss_cheese(const CubeDomain& Q, const std::vector<double>& ladder, const SwissCheeseOptions& opts = {});

/// Independent re-check of disjointness, containment and the density window.
PackingCertificate verify_packing(const CubeDomain& Q, const std::vector<double>& ladder, const std::vector<Ball>& balls);

struct DecompositionParams {
  int d = 2;
  int M = 1;
  int M_formula = 0;  ///< before clamping
  double l = 0.0;
  std::vector<double> ladder;  ///< R_k = R_1 C^{k-1}
  double C = 0.0;
  double kappa = 0.5;
  bool clamped = false;
  bool feasible = false;  ///< M < log(l / R_1) / (3 log C)
  std::vector<std::string> warnings;
};

/// C = max{1 + 4 sqrt(d)|B_1|, 8 sqrt(d)|B_1|, C_d}.
double decomposition_constant(int d);

/// Parameter choice from min(N1, N2); M is clamped to at least 1.
DecompositionParams fg_parameters(long N1, long N2, int d);

/// Normalized C^inf bump on [1 - kappa, 1 + kappa].
double bump_density(double t, double kappa);

struct FgSplitOptions {
  long samples = 4000;
  std::uint64_t seed = 1;
  double kappa = 0.5;
  double C = 0.0;                 ///< weight constant; 0 selects decomposition_constant(d)
  double max_relative_se = 0.0;   ///< 0 disables the variance guard
};

struct FgSplitResult {
  double weight = 0.0;            ///< M / (M + C)
  double localized = 0.0;         ///< weight · E[Σ_{i≠j} Σ_A 1_A 1_A c]
  double standard_error = 0.0;
  double localized_exact = 0.0;   ///< same expectation by quadrature over t
  double full = 0.0;              ///< Σ_{i≠j} c
  double residual = 0.0;          ///< full - localized (the w contribution)
  long samples = 0;
  double z_score() const;
  bool within(double k_se) const;
};

/// Monte-Carlo localized pair energy over random dilations and translations
/// of the periodized packing.
FgSplitResult fg_energy_split(const RieszKernel& k, const PointConfiguration& config, const BallPacking& packing,
                              const FgSplitOptions& opts);

struct AlmostSubadditiveReport {
  long N1 = 0, N2 = 0;
  double xi_total = 0.0;
  double xi_1 = 0.0;
  double xi_2 = 0.0;
  double excess = 0.0;   ///< xi_total - xi_1 - xi_2
  double c_add = 0.0;    ///< max(0, excess log(min) / (N1 + N2))
  double budget = 0.0;   ///< c_add (N1 + N2) / log(min)
  bool converged = false;
};

AlmostSubadditiveReport almost_subadditive_check(const RieszKernel& k, long N1, long N2, const MinimizeOptions& opts);

}  // namespace rieszlab

#pragma once

#include "rieszlab/core.hpp"

#include <string>
#include <vector>

namespace rieszlab {

/// Discrete probability measure on m sites.
struct GridMarginal {
  PointConfiguration sites{1};
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  int dim() const { return sites.dim(); }
  /// Nonnegative weights summing to 1 within 1e-12.
  void validate() const;

  /// m equal-mass midpoints of [a, b].
  static GridMarginal uniform_interval(double a, double b, int m);
  /// Rows "x_1,...,x_d,weight"; lines starting with '#' and a non-numeric header are skipped.
  static GridMarginal from_csv(const std::string& text);
};

/// Piecewise-constant probability density on an interval.
struct PiecewiseConstantDensity {
  std::vector<double> breaks;  ///< increasing, size n + 1
  std::vector<double> values;  ///< size n, nonnegative

  static PiecewiseConstantDensity uniform(double a, double b);
  /// Rescales the values to unit mass; throws on invalid input.
  static PiecewiseConstantDensity make(std::vector<double> breaks, std::vector<double> values);

  double mass() const;
  double max_density() const;
  double cdf(double x) const;
  double quantile(double u) const;
  /// ⟨rho, rho⟩ for the kernel |x - y|^{-s}.
  double self_energy(const RieszKernel& k) const;
  /// Midpoint quantization on m equal bins with bin masses as weights.
  GridMarginal discretize(int m) const;
};

/// Symmetric plan stored on sorted index tuples.
struct DiscretePlan {
  int N = 0;
  std::vector<std::vector<int>> tuples;
  std::vector<double> weights;

  /// One-body marginal (1/N) Σ_{S ∋ a} w_S on m sites.
  std::vector<double> marginal(std::size_t m) const;
  double total_weight() const;
};

struct MmotResult {
  DiscretePlan plan;
  double cost = 0.0;             ///< Σ_{i≠j} expected cost (ordered pairs)
  double certificate = 0.0;      ///< complementary-slackness residual
  std::size_t columns = 0;
  long iterations = 0;
};

/// Exact N-marginal optimum over symmetric plans on distinct-site tuples.
MmotResult mmot_bruteforce(const RieszKernel& k, const GridMarginal& marginal, int N);

/// Exact F_N for a 1D piecewise-constant density via the monotone rearrangement.
double monotone_1d(const RieszKernel& k, const PiecewiseConstantDensity& rho, int N);

/// E^xc = cost - N^2 ⟨mu, mu⟩; N = 1 uses F_1 = 0.
double exc(const RieszKernel& k, const PiecewiseConstantDensity& rho, int N, double cost);
/// Same for the normalized uniform measure on a cube.
double exc(const RieszKernel& k, const CubeDomain& K, int N, double cost);
/// Atomic marginals have infinite mean-field energy; this overload throws DomainError.
double exc(const RieszKernel& k, const GridMarginal& marginal, int N, double cost);

struct GrandCanonicalState {
  std::vector<double> lambdas;            ///< index n = 0..n_max
  std::vector<GridMarginal> marginals;    ///< empty weights where lambda_n = 0
  std::vector<DiscretePlan> plans;
  double constraint_residual = 0.0;       ///< max |Σ λ_n - 1|, |Σ n λ_n μ_n - N μ|
};

struct GrandCanonicalResult {
  GrandCanonicalState state;
  double cost = 0.0;
  double certificate = 0.0;
};

/// Grand-canonical relaxation, solved as one LP over all subsets of size <= n_max.
GrandCanonicalResult gc_ot(const RieszKernel& k, const GridMarginal& marginal, double N, int n_max);

struct SubadditivityComponent {
  int M = 1;
  GridMarginal marginal;
};

struct SubadditivityVerdict {
  double lhs = 0.0;        ///< F_M(mix) - Σ_{i≠j} M_i M_j ⟨mu_i, mu_j⟩
  double rhs = 0.0;        ///< Σ F_{M_i}(mu_i)
  double violation = 0.0;  ///< max(0, lhs - rhs)
  bool holds = false;
};

/// Checks E^xc_M(mix) <= Σ E^xc_{M_i}(mu_i) for atomic components with disjoint
/// supports; the infinite diagonal self-energies appear on both sides and are cancelled.
SubadditivityVerdict subadditivity_check(const RieszKernel& k, const std::vector<SubadditivityComponent>& components);

struct SeparationBound {
  double radius = 0.0;
  double diameter = 0.0;
  bool vacuous = false;  ///< radius >= support diameter
};

/// (N^2 (N-1)/2 · ω(1/(N^2 (N-1))))^{-1/s} with ω(t) = (t / (ρ_max |B_1|))^{1/d}.
SeparationBound plan_separation_bound(const RieszKernel& k, const PiecewiseConstantDensity& rho, int N);
SeparationBound plan_separation_bound(const RieszKernel& k, const CubeDomain& K, int N);

/// Smallest pairwise site distance over the plan support.
double plan_min_separation(const DiscretePlan& plan, const GridMarginal& marginal);

}  // namespace rieszlab

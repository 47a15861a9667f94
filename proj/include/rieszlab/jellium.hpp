#pragma once

#include "rieszlab/core.hpp"
#include "rieszlab/potentials.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rieszlab {

/// Energies use ordered pairs: pair_sum = Σ_{i≠j} c(x_i - x_j).
struct EnergyBreakdown {
  double pair_sum = 0.0;
  double attraction = 0.0;       ///< ⟨mu, nu⟩
  double background_self = 0.0;  ///< ⟨mu, mu⟩
  double total = 0.0;
  bool jellium_mode = true;
};

double pair_sum(const RieszKernel& k, const PointConfiguration& config);

/// total = pair_sum - 2 attraction + background_self, background 1_K.
EnergyBreakdown e_jel(const RieszKernel& k, const CubeDomain& K, const PointConfiguration& config);
/// Same with a precomputed ⟨1_K, 1_K⟩.
EnergyBreakdown e_jel(const RieszKernel& k, const CubeDomain& K, const PointConfiguration& config,
                      double background_self);
/// Gradient with respect to the flattened coordinates.
std::vector<double> e_jel_gradient(const RieszKernel& k, const CubeDomain& K, const PointConfiguration& config);

/// total = pair_sum - background_self for a nonnegative background mu.
EnergyBreakdown e_ueg(const RieszKernel& k, const SignedChargeSystem& mu, const PointConfiguration& config);
EnergyBreakdown e_ueg(const RieszKernel& k, const UniformMeasure& mu, const PointConfiguration& config);

/// 2⟨mu, nu - mu⟩, equal to e_ueg - e_jel for mu = 1_K.
double jel_ueg_gap(const RieszKernel& k, const SignedChargeSystem& mu, const PointConfiguration& config);
double jel_ueg_gap(const RieszKernel& k, const UniformMeasure& mu, const PointConfiguration& config);

struct MinimizeOptions {
  std::uint64_t seed = 0;
  int restarts = 8;
  double gradient_tolerance = 1e-6;  ///< max-norm of the projected gradient
  int max_iterations = 3000;
  bool anneal = true;
};

struct MinimizationResult {
  CubeDomain cube;
  PointConfiguration configuration{1};
  EnergyBreakdown energy;
  double separation = 0.0;
  int restarts_used = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  int iterations = 0;
};

/// Multi-start projected L-BFGS for Ξ_{N,s}(K).
MinimizationResult minimize_jellium(const RieszKernel& k, const CubeDomain& K, int N, const MinimizeOptions& opts);
/// Single local descent from a given start (no annealing).
MinimizationResult refine_jellium(const RieszKernel& k, const CubeDomain& K, const PointConfiguration& start,
                                  const MinimizeOptions& opts);

/// r_B (4d/ε + 1)^{-1/(d-2)} with r_B = (d / |S^{d-1}|)^{1/d}; d >= 3, 0 < ε < 2.
double separation_radius(const RieszKernel& k, double epsilon);

struct SeparationCertificate {
  bool applicable = false;
  bool passed = false;
  bool vacuous = false;
  double min_distance = 0.0;
  double threshold = 0.0;
  std::string note;
};

/// Checks min pairwise distance >= separation_radius for a unit-density cube.
SeparationCertificate check_separation(const PointConfiguration& config, const CubeDomain& K, const RieszKernel& k,
                                       double epsilon);
SeparationCertificate check_separation(const MinimizationResult& result, const RieszKernel& k, double epsilon);

/// -4 N |S^{d-1}| / (d - s).
double jellium_lower_bound(const RieszKernel& k, int N);

}  // namespace rieszlab

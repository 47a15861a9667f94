#pragma once

#include "rieszlab/core.hpp"
#include "rieszlab/jellium.hpp"
#include "rieszlab/potentials.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rieszlab {

using Basis = Eigen::MatrixXd;

/// Unit-density lattice; basis vectors are the columns of `basis`.
struct Lattice {
  std::string name;
  Basis basis;

  int dim() const { return static_cast<int>(basis.rows()); }

  static Lattice integer(int d);
  static Lattice bcc();
  static Lattice fcc();
  static Lattice triangular();
  /// Throws ParameterError unless |det| = 1 within 1e-12.
  static Lattice custom(std::string name, Basis basis);
  /// {"name": ..., "basis": [[...], ...]}; each inner array is one basis vector.
  static Lattice from_json(const std::string& text);
  /// Builtin name ("Z1".."Z8", "Zd" with d, "BCC", "FCC", "triangular").
  static Lattice by_name(const std::string& name, int d = 3);
};

/// Lattice points in the half-open cube.
PointConfiguration lattice_in_cube(const Lattice& L, const CubeDomain& K);

/// (1/2) Z_Λ(s) from the Ewald-type split of the Epstein zeta function.
double epstein_half(const Lattice& L, double s);

struct WindowSample {
  double side = 0.0;
  std::size_t points = 0;
  double energy_per_point = 0.0;  ///< e_jel / (2 N), same normalization as the constant
};

struct LatticeConstant {
  double value = 0.0;
  double error = 0.0;
  std::string method;
  std::vector<WindowSample> windows;
  std::vector<std::string> warnings;
};

/// Per-point jellium constant of a periodic lattice; the optional window sides
/// add finite-window energies as a cross-check (not used in the estimate).
LatticeConstant periodic_energy_per_point(const RieszKernel& k, const Lattice& L,
                                          const std::vector<double>& window_sides = {});

/// Translation average of a periodic configuration restricted to K_R.
struct AveragedMarginal {
  PeriodicConfiguration base;
  CubeDomain window;
  double alpha = 0.0;          ///< (1 - R1/R)^d
  std::vector<Vec> offsets;    ///< density = R1^{-d} Σ 1_{window + offset}

  double cell_side() const { return base.cell.side; }
  double density(const Vec& x) const;
  double mass() const;
  SignedChargeSystem charge_system() const;
  /// Lattice points of the periodic configuration inside the window.
  PointConfiguration window_points() const;
};

AveragedMarginal averaged_plan_marginal(const PeriodicConfiguration& base, const CubeDomain& K_R);

/// ⟨mu, mu⟩ for the averaged marginal, reusing repeated offset differences.
double averaged_self_energy(const RieszKernel& k, const AveragedMarginal& mu);

/// Pair sum of the window points minus ⟨mu, mu⟩ (an upper bound for the
/// exchange-correlation energy with marginal mu / N).
EnergyBreakdown plan_energy_ueg(const RieszKernel& k, const PeriodicConfiguration& base, const CubeDomain& K_R);

EnergyBreakdown e_ueg(const RieszKernel& k, const AveragedMarginal& mu, const PointConfiguration& config);

/// 2^d-fold reflection through the lower corner of the cell.
PeriodicConfiguration reflect_symmetrize(const PeriodicConfiguration& base_cell);

}  // namespace rieszlab

#pragma once

#include "rieszlab/core.hpp"

#include <string>
#include <vector>

namespace rieszlab {

/// Weighted atoms plus weighted uniform boxes (weights may be negative).
struct SignedChargeSystem {
  int dim = 1;
  PointConfiguration atoms{1};
  std::vector<double> atom_weights;
  std::vector<CubeDomain> boxes;
  std::vector<double> box_weights;  ///< charge per unit volume

  explicit SignedChargeSystem(int d = 1) : dim(d), atoms(d) {}

  static SignedChargeSystem from_configuration(const PointConfiguration& config, double weight = 1.0);
  static SignedChargeSystem from_measure(const UniformMeasure& mu, double sign = 1.0);

  void add_atom(const Vec& p, double w);
  void add_box(const CubeDomain& K, double density);
  void append(const SignedChargeSystem& other, double scale = 1.0);
  SignedChargeSystem scaled(double a) const;

  double total_charge() const;
  Vec dipole() const;
  /// Σ w |y|^2 over the system.
  double second_moment() const;
  /// Σ |w| |y|^2 over the system.
  double absolute_second_moment() const;
  /// Largest |y| over atoms and box corners.
  double support_radius() const;
  bool empty() const { return atom_weights.empty() && box_weights.empty(); }
};

/// ∫_K |y - p|^{-s} dy, d <= 3.
double point_cube_integral(const RieszKernel& k, const CubeDomain& K, const Vec& p);
/// Gradient of point_cube_integral with respect to p (p inside or outside K, not on a face).
Vec point_cube_gradient(const RieszKernel& k, const CubeDomain& K, const Vec& p);
/// Value and (optionally) gradient from one pass over the faces.
double point_cube_value_gradient(const RieszKernel& k, const CubeDomain& K, const Vec& p, Vec* grad);
/// ∫_{K1}∫_{K2} |x - y|^{-s} dy dx, d <= 3.
double cube_cube_integral(const RieszKernel& k, const CubeDomain& K1, const CubeDomain& K2);

/// ⟨mu, nu⟩ = ∫∫ c d mu d nu. With off_diagonal, coincident atom pairs are
/// skipped; otherwise they raise SingularPairError. Symmetric bit-for-bit.
double pairing(const RieszKernel& k, const SignedChargeSystem& mu, const SignedChargeSystem& nu, bool off_diagonal);

/// h^sys(x) = ∫ c(x - y) d sys(y).
double potential_h(const RieszKernel& k, const SignedChargeSystem& sys, const Vec& x);

struct MultipoleCell {
  double support_radius = 0.0;  ///< expansion valid for |x| >= support_radius
  double monopole = 0.0;
  Vec dipole;
  double remainder_constant = 0.0;  ///< s(s+2)+1
  double abs_second_moment = 0.0;
};

struct TailEstimate {
  double value = 0.0;
  double bound = 0.0;
};

/// Validity radius max(2 sqrt(d) R1, 4 max|y|), where R1 is the cell side.
MultipoleCell make_multipole_cell(const RieszKernel& k, const SignedChargeSystem& sys, double cell_side);
/// Monopole + dipole approximation of potential_h with a sound remainder bound.
TailEstimate multipole_tail(const MultipoleCell& cell, const RieszKernel& k, const Vec& x);

struct NetPotentialResult {
  double value = 0.0;
  double near_field = 0.0;
  double far_field = 0.0;
  double split_radius = 0.0;
  /// Bound on |far_field| from the quadratic multipole remainder.
  double far_field_bound = 0.0;
  bool conditional = false;  ///< s == d - 2: shell-wise (spherical) summation
  std::vector<std::string> warnings;
};

/// ∫_{R^d} h^sys(x) dx for a neutral, dipole-free system, summed over
/// spherical shells. Zero for d-2 < s < d.
NetPotentialResult net_potential_integral(const RieszKernel& k, const SignedChargeSystem& sys);

struct FourierLimit {
  double estimate = 0.0;
  double error = 0.0;
  std::vector<double> xi;
  std::vector<double> values;       ///< direction-averaged c_FT |xi|^{s-d} Re σ^(xi)
  std::vector<double> imag_values;  ///< same with Im σ^(xi); grows when a dipole is present
  bool dipole_flag = false;
  std::vector<std::string> warnings;
};

/// Small-ξ limit of the Fourier expression with Richardson extrapolation.
/// Empty xi_sequence selects |ξ_j| = 2^{-j}, j = 4..20.
FourierLimit fourier_zero_limit(const RieszKernel& k, const SignedChargeSystem& sys,
                                std::vector<double> xi_sequence = {});

}  // namespace rieszlab

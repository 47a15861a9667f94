#pragma once

#include "rieszlab/core.hpp"
#include "rieszlab/jellium.hpp"
#include "rieszlab/lattice.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rieszlab {

/// value_N = C + a N^{-p} + b N^{-2p} (terms = 3) or without the b term (terms = 2).
struct FitModel {
  double exponent = 1.0;
  int terms = 3;

  static FitModel surface(int d) { return FitModel{1.0 / d, 3}; }
  std::string describe() const;
};

struct ConstantEstimate {
  double value = 0.0;
  double error = 0.0;            ///< max of the three estimates below
  double jackknife_error = 0.0;
  double holdout_residual = 0.0; ///< |prediction - value| at the largest N, fitted without it
  double fit_standard_error = 0.0;  ///< from the residual variance; 0 without spare points
  std::string model;
  std::vector<double> coefficients;  ///< C, a[, b]
  std::vector<std::pair<double, double>> series;
  std::vector<double> residuals;
};

/// Least-squares extrapolation N → ∞. Needs at least 4 points with strictly
/// increasing N; a rank-deficient design raises FitError.
ConstantEstimate extrapolate_constant(const std::vector<std::pair<double, double>>& series, const FitModel& model);

enum class ScanProblem { Jellium, Ot };

struct ScanOptions {
  MinimizeOptions minimize;
  int grid_m = 0;  ///< grid points per axis for the OT problem in d >= 2 (0 picks a default)
};

struct ScanResult {
  ScanProblem problem = ScanProblem::Jellium;
  int d = 1;
  int N = 1;
  std::vector<double> s;
  std::vector<double> values;
  std::vector<double> jumps;  ///< |value_{i+1} - value_i|
  double max_jump = 0.0;      ///< NaN for a single grid point
  bool diagnostic_defined = false;
  bool endpoint_growth = false;  ///< largest jump sits at the upper end of the grid
  std::vector<std::string> warnings;
};

/// Jellium: Ξ_{N,s} on the centered cube of volume N, first point multi-start,
/// later points refined from the previous minimizer so one branch is followed.
/// OT: F_{N,s} of the uniform law on [0,1]^d (monotone in d = 1, grid MMOT otherwise).
ScanResult scan_s(ScanProblem problem, int d, int N, const std::vector<double>& s_grid, const ScanOptions& opts);

/// Ratio of the refined to the coarse max jump.
double jump_refinement_ratio(const ScanResult& coarse, const ScanResult& fine);

struct LimitRow {
  double R = 0.0;
  std::size_t N = 0;
  double d1 = 0.0;  ///< (E_UEG(K_R, ν) - E_Jel(K_R, ν)) / N
  double d2 = 0.0;  ///< (E_UEG(μ_{N,R1}, ν) - E_UEG(K_R, ν)) / N
};

struct LimitReport {
  std::vector<LimitRow> rows;
  double rhs1_spatial = 0.0;  ///< 2 / |K_{R1}| ∫ h^{ν - 1} over one cell
  double rhs1_fourier = 0.0;
  double rhs2_spatial = 0.0;  ///< per-cell integral for the averaged background
  double rhs2_fourier = 0.0;
  bool asserted = false;      ///< d - 2 < s < d
  bool monotone1 = false;     ///< |d1| strictly decreasing along the sequence
  bool monotone2 = false;
  bool converged = false;     ///< asserted, monotone and right-hand sides at zero
  std::vector<std::string> warnings;
};

/// Finite-R differences between the jellium, uniform and averaged-marginal
/// energies of a zero-barycenter periodic configuration, and their limits.
LimitReport comparison_limits(const RieszKernel& k, const PeriodicConfiguration& base, const std::vector<double>& R_sequence);

struct CompareBudgets {
  std::vector<int> jellium_N;
  std::vector<int> ot_N;
  int grid_m = 0;       ///< OT grid points per axis for d >= 2
  std::string lattice;  ///< empty picks Z1, triangular or BCC
  MinimizeOptions minimize;

  static CompareBudgets defaults(int d);
};

struct CompareReport {
  int d = 1;
  double s = 0.0;
  ConstantEstimate jellium;  ///< Ξ_N / N
  ConstantEstimate ot;       ///< E^xc_N / N^{1+s/d}
  LatticeConstant lattice;   ///< halved normalization
  double lattice_per_point = 0.0;  ///< 2 × lattice.value, comparable with the two series
  std::vector<std::pair<int, double>> gaps;  ///< |jellium_N - ot_N| where both exist
  double difference = 0.0;         ///< jellium.value - ot.value
  double combined_error = 0.0;
  bool easy_inequality = false;    ///< jellium <= ot + combined error
  bool d1_agreement = false;       ///< d = 1 only: relative difference <= 5%
  bool all_negative = false;
  std::vector<std::string> warnings;
};

CompareReport compare_constants(const RieszKernel& k, const CompareBudgets& budgets);

}  // namespace rieszlab

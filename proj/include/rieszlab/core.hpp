#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rieszlab {

constexpr int kMaxDim = 8;

/// Small fixed-capacity vector; never heap allocates.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class SingularPairError : public Error {
 public:
  using Error::Error;
};

class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what + " (achieved " + std::to_string(achieved) + ")"), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConstraintError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dimensional constants

/// Surface area of the unit sphere S^{d-1} in R^d (|S^0| = 2).
double sphere_area(int d);
/// Volume of the unit ball in R^d.
double ball_volume(int d);

// ---------------------------------------------------------------------------
// Kernels

/// c(x) = |x|^{-s} on R^d with 0 < s < d.
struct RieszKernel {
  double s;
  int d;

  RieszKernel(double s, int d);

  /// Radial profile r^{-s}; r must be positive.
  double radial(double r) const;
  /// Throws SingularPairError for coincident points.
  double operator()(const Vec& x, const Vec& y) const;
  bool coulomb() const;
};

double kernel_eval(const RieszKernel& k, const Vec& x, const Vec& y);

/// c_eta = min{c, c(eta)} and f_eta = c - c_eta.
struct TruncatedKernel {
  RieszKernel base;
  double eta;

  double capped(double r) const;
  double remainder(double r) const;
  double capped(const Vec& x, const Vec& y) const;
  double remainder(const Vec& x, const Vec& y) const;
};

TruncatedKernel kernel_truncate(const RieszKernel& k, double eta);

/// Lens volume |B_{r/2}(0) ∩ B_{r/2}(x)| for |x| = t; zero for t >= r.
double hs_hat(int d, double r, double t);

/// Coefficient K with f(r) = K r^{-s-d-1}, obtained by quadrature of the
/// weight formula with the symbolic (d+1)-th derivative of r^{-s}.
double hs_weight_coefficient(const RieszKernel& k);

/// c_alpha(t) = ∫_{max(alpha,t)}^∞ h_r(t) f(r) dr.
double hs_regularize(const RieszKernel& k, double alpha, double t);
double hs_regularize(const RieszKernel& k, double alpha, const Vec& x, const Vec& y);

/// Normalization constant c_{d,s} for d-2 <= s < d.
double c_sd(double s, int d);
double c_sd(const RieszKernel& k);

/// Fourier transform constant: FT(|x|^{-s})(xi) = fourier_constant * |xi|^{s-d}.
double fourier_constant(const RieszKernel& k);

// ---------------------------------------------------------------------------
// Domains and configurations

/// Half-open cube center + [-side/2, side/2)^d.
struct CubeDomain {
  Vec center;
  double side = 1.0;

  CubeDomain() = default;
  CubeDomain(Vec center, double side);
  static CubeDomain centered(int d, double side);
  static CubeDomain from_lower(const Vec& lower, double side);

  int dim() const { return static_cast<int>(center.size()); }
  double volume() const;
  double lo(int k) const { return center[k] - 0.5 * side; }
  double hi(int k) const { return center[k] + 0.5 * side; }
  Vec lower() const;
  bool contains(const Vec& p) const;
  bool contains_closed(const Vec& p) const;
  CubeDomain translated(const Vec& a) const;
};

/// Background charge intensity * 1_K dx.
struct UniformMeasure {
  CubeDomain domain;
  double intensity = 1.0;

  double mass() const { return intensity * domain.volume(); }
};

class PointConfiguration {
 public:
  explicit PointConfiguration(int dim = 1);
  PointConfiguration(int dim, std::vector<double> coords);

  int dim() const { return dim_; }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return coords_.empty(); }

  Vec point(std::size_t i) const;
  double coord(std::size_t i, int k) const { return coords_[i * dim_ + k]; }
  void push_back(const Vec& p);

  const std::vector<double>& coords() const { return coords_; }
  std::vector<double>& coords() { return coords_; }

  /// Minimum pairwise distance; +inf for fewer than two points.
  double min_separation() const;
  Vec barycenter_sum() const;
  PointConfiguration translated(const Vec& a) const;

 private:
  int dim_;
  std::vector<double> coords_;
};

/// (side Z)^d-periodic extension of the points in `cell`.
struct PeriodicConfiguration {
  CubeDomain cell;
  PointConfiguration base_points;
  bool zero_barycenter = false;

  /// Checks membership, unit-density count and (if flagged) Σp = 0.
  void validate(bool require_unit_density = true) const;
  /// Σ (p - cell.center) over base points.
  Vec centered_moment() const;
};

/// Euclidean norm helper.
double norm(const Vec& v);

/// 64-bit FNV-1a digest of raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& text);
/// Lower-case 16-digit hexadecimal form.
std::string hex64(std::uint64_t v);

}  // namespace rieszlab

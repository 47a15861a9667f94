#include "rieszlab/core.hpp"

#include "rieszlab/quadrature.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace rieszlab {

namespace {

constexpr double kPi = std::numbers::pi;

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw ParameterError("dimension must lie in [1, 8], got " + std::to_string(d));
}

}  // namespace

double sphere_area(int d) {
  check_dim(d);
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

double ball_volume(int d) {
  check_dim(d);
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double norm(const Vec& v) { return v.norm(); }

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text) { return fnv1a64(text.data(), text.size()); }

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
  return out;
}

// ---------------------------------------------------------------------------

RieszKernel::RieszKernel(double s_, int d_) : s(s_), d(d_) {
  check_dim(d);
  if (!(s > 0.0 && s < d)) {
    std::ostringstream os;
    os << "Riesz exponent must satisfy 0 < s < d; got s=" << s << ", d=" << d;
    throw ParameterError(os.str());
  }
}

double RieszKernel::radial(double r) const { return std::pow(r, -s); }

double RieszKernel::operator()(const Vec& x, const Vec& y) const {
  const double r = (x - y).norm();
  if (r == 0.0) throw SingularPairError("singular pair: coincident points");
  return radial(r);
}

bool RieszKernel::coulomb() const { return d >= 3 && s == d - 2; }

double kernel_eval(const RieszKernel& k, const Vec& x, const Vec& y) { return k(x, y); }

double TruncatedKernel::capped(double r) const { return r >= eta ? base.radial(r) : base.radial(eta); }

double TruncatedKernel::remainder(double r) const {
  if (r >= eta) return 0.0;
  if (r == 0.0) throw SingularPairError("singular pair: coincident points");
  return base.radial(r) - base.radial(eta);
}

double TruncatedKernel::capped(const Vec& x, const Vec& y) const { return capped((x - y).norm()); }
double TruncatedKernel::remainder(const Vec& x, const Vec& y) const { return remainder((x - y).norm()); }

TruncatedKernel kernel_truncate(const RieszKernel& k, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ParameterError("truncation radius eta must be positive");
  return TruncatedKernel{k, eta};
}

// ---------------------------------------------------------------------------
// Hardin-Saff representation

namespace {

// h_r(t) = r^d * hat_unit(t / r)
double hat_unit(int d, double tau) {
  if (tau >= 1.0) return 0.0;
  if (tau < 0.0) tau = -tau;
  const double a = 0.5 * (d + 1);
  const double pref = std::pow(kPi / 4.0, 0.5 * (d - 1)) / std::tgamma(a);
  const double beta = boost::math::beta(0.5, a);
  return pref * 0.5 * beta * boost::math::ibetac(0.5, a, tau * tau);
}

}  // namespace

double hs_hat(int d, double r, double t) {
  check_dim(d);
  if (r <= 0.0) return 0.0;
  return std::pow(r, d) * hat_unit(d, t / r);
}

double hs_weight_coefficient(const RieszKernel& k) {
  const int d = k.d;
  const double s = k.s;
  if (d == 1) return s * (s + 1.0);
  double falling = 1.0;
  for (int j = 0; j <= d; ++j) falling *= s + j;
  const double e = 0.5 * (d - 3);
  double err = 0.0;
  // u = 1 - v^2 absorbs the (1 - u)^{(d-3)/2} endpoint factor
  const double inner = quad::tanh_sinh(
      [&](double v) {
        const double u = 1.0 - v * v;
        return 2.0 * std::pow(u, s + 1.0) * std::pow(1.0 + u, e) * std::pow(v, 2.0 * e + 1.0);
      },
      0.0, 1.0, 1e-14, &err);
  if (!(err <= 1e-10 * std::abs(inner))) throw AccuracyError("hs weight quadrature did not converge", err);
  return falling * 2.0 / (std::tgamma(0.5 * (d - 1)) * std::pow(kPi, 0.5 * (d - 1))) * inner;
}

double hs_regularize(const RieszKernel& k, double alpha, double t) {
  if (!(alpha >= 0.0)) throw ParameterError("regularization length alpha must be nonnegative");
  if (t < 0.0) t = -t;
  const double m = std::max(alpha, t);
  if (m == 0.0) throw SingularPairError("singular pair: coincident points with alpha = 0");
  const double K = hs_weight_coefficient(k);
  // r = m / u, then u = w^{1/s}: c = K m^{-s} / s * ∫_0^1 hat(t w^{1/s} / m) dw
  const double s = k.s;
  double err = 0.0;
  const double integral = quad::tanh_sinh(
      [&](double w) { return hat_unit(k.d, t * std::pow(w, 1.0 / s) / m); }, 0.0, 1.0, 1e-13, &err);
  if (!(err <= 1e-9 * std::abs(integral) + 1e-300)) throw AccuracyError("hs_regularize quadrature did not converge", err);
  return K * std::pow(m, -s) / s * integral;
}

double hs_regularize(const RieszKernel& k, double alpha, const Vec& x, const Vec& y) {
  return hs_regularize(k, alpha, (x - y).norm());
}

double c_sd(double s, int d) {
  check_dim(d);
  if (!(s >= d - 2.0 && s < d)) {
    std::ostringstream os;
    os << "c_sd requires d-2 <= s < d; got s=" << s << ", d=" << d;
    throw UnsupportedError(os.str());
  }
  if (s == 0.0 && d == 2) return 2.0 * kPi;
  if (s == d - 2.0) return (d - 2) * 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
  return 2.0 * s * 2.0 * std::pow(kPi, 0.5 * d) * std::tgamma(0.5 * (s + 2.0 - d)) / std::tgamma(0.5 * (s + 2.0));
}

double c_sd(const RieszKernel& k) { return c_sd(k.s, k.d); }

double fourier_constant(const RieszKernel& k) {
  const double d = k.d;
  return std::pow(kPi, 0.5 * d) * std::pow(2.0, d - k.s) * std::tgamma(0.5 * (d - k.s)) / std::tgamma(0.5 * k.s);
}

// ---------------------------------------------------------------------------
// Domains

CubeDomain::CubeDomain(Vec c, double side_) : center(std::move(c)), side(side_) {
  check_dim(static_cast<int>(center.size()));
  if (!(side > 0.0) || !std::isfinite(side)) throw ParameterError("cube side must be positive");
}

CubeDomain CubeDomain::centered(int d, double side) { return CubeDomain(Vec::Zero(d), side); }

CubeDomain CubeDomain::from_lower(const Vec& lower, double side) {
  Vec c = lower;
  c.array() += 0.5 * side;
  return CubeDomain(c, side);
}

double CubeDomain::volume() const { return std::pow(side, dim()); }

Vec CubeDomain::lower() const {
  Vec l = center;
  l.array() -= 0.5 * side;
  return l;
}

bool CubeDomain::contains(const Vec& p) const {
  for (int k = 0; k < dim(); ++k)
    if (!(p[k] >= lo(k) && p[k] < hi(k))) return false;
  return true;
}

bool CubeDomain::contains_closed(const Vec& p) const {
  for (int k = 0; k < dim(); ++k)
    if (!(p[k] >= lo(k) && p[k] <= hi(k))) return false;
  return true;
}

CubeDomain CubeDomain::translated(const Vec& a) const { return CubeDomain(center + a, side); }

// ---------------------------------------------------------------------------
// Configurations

PointConfiguration::PointConfiguration(int dim) : dim_(dim) { check_dim(dim); }

PointConfiguration::PointConfiguration(int dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  check_dim(dim);
  if (coords_.size() % static_cast<std::size_t>(dim) != 0)
    throw ParameterError("coordinate count is not a multiple of the dimension");
}

Vec PointConfiguration::point(std::size_t i) const {
  Vec p(dim_);
  for (int k = 0; k < dim_; ++k) p[k] = coords_[i * dim_ + k];
  return p;
}

void PointConfiguration::push_back(const Vec& p) {
  if (p.size() != dim_) throw ParameterError("point dimension mismatch");
  for (int k = 0; k < dim_; ++k) coords_.push_back(p[k]);
}

double PointConfiguration::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (int k = 0; k < dim_; ++k) {
        const double t = coords_[i * dim_ + k] - coords_[j * dim_ + k];
        r2 += t * t;
      }
      best = std::min(best, std::sqrt(r2));
    }
  return best;
}

Vec PointConfiguration::barycenter_sum() const {
  Vec b = Vec::Zero(dim_);
  for (std::size_t i = 0; i < size(); ++i) b += point(i);
  return b;
}

PointConfiguration PointConfiguration::translated(const Vec& a) const {
  PointConfiguration out(dim_, coords_);
  for (std::size_t i = 0; i < size(); ++i)
    for (int k = 0; k < dim_; ++k) out.coords_[i * dim_ + k] += a[k];
  return out;
}

Vec PeriodicConfiguration::centered_moment() const {
  Vec m = Vec::Zero(cell.dim());
  for (std::size_t i = 0; i < base_points.size(); ++i) m += base_points.point(i) - cell.center;
  return m;
}

void PeriodicConfiguration::validate(bool require_unit_density) const {
  if (base_points.dim() != cell.dim()) throw ParameterError("periodic configuration: dimension mismatch");
  for (std::size_t i = 0; i < base_points.size(); ++i)
    if (!cell.contains(base_points.point(i))) throw ParameterError("periodic configuration: base point outside the cell");
  if (require_unit_density) {
    const double v = cell.volume();
    if (std::abs(v - static_cast<double>(base_points.size())) > 1e-9 * std::max(1.0, v))
      throw ParameterError("periodic configuration: unit density needs side^d base points");
  }
  if (zero_barycenter && centered_moment().norm() > 1e-12 * cell.side)
    throw ParameterError("periodic configuration: barycenter is not zero");
}

}  // namespace rieszlab

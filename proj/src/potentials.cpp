#include "rieszlab/potentials.hpp"

#include "rieszlab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace rieszlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-13;

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// ∫_0^rho (h^2 + r^2)^{-s/2} r dr
double radial_primitive(double s, double h, double rho) {
  if (rho <= 0.0) return 0.0;
  const double eps = 2.0 - s;
  if (h == 0.0) return eps > 0.0 ? std::pow(rho, eps) / eps : kInf;
  const double q = rho / h;
  const double L = q > 1e100 ? std::log(q) : 0.5 * std::log1p(q * q);
  const double x = eps * L;
  const double he = std::pow(h, eps);
  if (std::abs(x) < 1e-8) return he * L * (1.0 + 0.5 * x);
  return he * std::expm1(x) / eps;
}

// ∫_0^X (h^2 + t^2)^{-s/2} dt
double line_half(double s, double h, double X) {
  if (X <= 0.0) return 0.0;
  if (h == 0.0) return s < 1.0 ? std::pow(X, 1.0 - s) / (1.0 - s) : kInf;
  const double U = std::asinh(X / h);
  const double e = 1.0 - s;
  return std::pow(h, e) * quad::gk([e](double u) { return std::pow(std::cosh(u), e); }, 0.0, U, kQuadTol);
}

// ∫_0^X (h^2 + t^2)^{-s/2} t^e dt, e in {0, 1}
double line_moment(double s, double h, double X, int e) {
  return e == 0 ? line_half(s, h, X) : radial_primitive(s, h, X);
}

// ∫_0^R (h^2 + r^2)^{-s/2} r^{1+n} dr
double radial_moment(double s, double h, double R, int n) {
  if (R <= 0.0) return 0.0;
  if (n == 0) return radial_primitive(s, h, R);
  if (R < h) {
    return quad::gk([&](double r) { return std::pow(h * h + r * r, -0.5 * s) * std::pow(r, 1.0 + n); }, 0.0, R,
                    kQuadTol);
  }
  // r^2 = (h^2 + r^2) - h^2 lowers the moment by two
  if (n == 1) return line_half(s - 2.0, h, R) - h * h * line_half(s, h, R);
  return radial_primitive(s - 2.0, h, R) - h * h * radial_primitive(s, h, R);
}

// ∫_{[0,X]x[0,Y]} (h^2 + |v|^2)^{-s/2} v1^{e1} v2^{e2} dv by polar triangles
double corner_2d(double s, double h, double X, double Y, int e1, int e2) {
  if (X <= 0.0 || Y <= 0.0) return 0.0;
  const int n = e1 + e2;
  const double th = std::atan2(Y, X);
  auto ang = [&](double t) { return std::pow(std::cos(t), e1) * std::pow(std::sin(t), e2); };
  const double t1 = quad::gk([&](double t) { return ang(t) * radial_moment(s, h, X / std::cos(t), n); }, 0.0, th,
                             kQuadTol);
  const double t2 = quad::gk([&](double t) { return ang(t) * radial_moment(s, h, Y / std::sin(t), n); }, th,
                             0.5 * std::numbers::pi, kQuadTol);
  return t1 + t2;
}

// ∫ over an axis-aligned rectangle (foot-relative bounds) of dimension m of (h^2 + |v|^2)^{-s/2}
double face_integral(double s, int m, double h, const double* lo, const double* hi) {
  if (m == 0) return h > 0.0 ? std::pow(h, -s) : kInf;
  if (m == 1) {
    auto F = [&](double x) { return sgn(x) * line_half(s, h, std::abs(x)); };
    return F(hi[0]) - F(lo[0]);
  }
  auto F = [&](double x, double y) { return sgn(x) * sgn(y) * corner_2d(s, h, std::abs(x), std::abs(y), 0, 0); };
  return F(hi[0], hi[1]) - F(lo[0], hi[1]) - F(hi[0], lo[1]) + F(lo[0], lo[1]);
}

void require_supported(const RieszKernel& k) {
  if (k.d > 3) throw UnsupportedError("cube integrals are implemented for d <= 3");
}

// Bounds of the face orthogonal to `axis`, relative to the foot of p.
int face_bounds(const CubeDomain& K, const Vec& p, int axis, double* lo, double* hi) {
  int m = 0;
  for (int j = 0; j < K.dim(); ++j) {
    if (j == axis) continue;
    lo[m] = K.lo(j) - p[j];
    hi[m] = K.hi(j) - p[j];
    ++m;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Cube-cube via the difference variable u = x - y.

struct Piece {
  double lo, hi, alpha, beta;  // overlap length alpha + beta*u on [lo, hi]
};

std::vector<Piece> overlap_pieces(double a1, double b1, double a2, double b2) {
  std::vector<double> br{a1 - b2, a1 - a2, b1 - b2, b1 - a2};
  if (a1 - b2 < 0.0 && 0.0 < b1 - a2) br.push_back(0.0);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  std::vector<Piece> out;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double l = br[i], h = br[i + 1];
    if (!(h > l)) continue;
    const double mid = 0.5 * (l + h);
    const bool min_var = b2 + mid < b1;
    const bool max_var = a2 + mid > a1;
    const double alpha = (min_var ? b2 : b1) - (max_var ? a2 : a1);
    const double beta = (min_var ? 1.0 : 0.0) - (max_var ? 1.0 : 0.0);
    if (alpha + beta * mid <= 0.0) continue;
    out.push_back({l, h, alpha, beta});
  }
  return out;
}

// ∫_{[0,c]} |v|^{-s} v^e dv via the homogeneous divergence identity.
double corner_monomial(double s, int d, const double* c, const int* e) {
  int deg = 0;
  for (int k = 0; k < d; ++k) deg += e[k];
  double sum = 0.0;
  for (int k = 0; k < d; ++k) {
    double face;
    if (d == 2) {
      const int j = 1 - k;
      face = line_moment(s, c[k], c[j], e[j]);
    } else {
      const int j1 = (k + 1) % 3, j2 = (k + 2) % 3;
      face = corner_2d(s, c[k], c[j1], c[j2], e[j1], e[j2]);
    }
    sum += std::pow(c[k], 1.0 + e[k]) * face;
  }
  return sum / (d - s + deg);
}

double gl_box(double s, int d, const double* lo, const double* hi, const Piece* const* pieces, int depth) {
  double d0 = 0.0, diam = 0.0;
  int longest = 0;
  for (int k = 0; k < d; ++k) {
    const double cl = std::clamp(0.0, lo[k], hi[k]);
    d0 += cl * cl;
    const double w = hi[k] - lo[k];
    diam += w * w;
    if (w > hi[longest] - lo[longest]) longest = k;
  }
  d0 = std::sqrt(d0);
  diam = std::sqrt(diam);
  if (d0 == 0.0) throw AccuracyError("cube_cube_integral: singular sub-box missed the corner expansion", 0.0);
  if (d0 < diam && depth < 60) {
    double mid_hi[3], mid_lo[3];
    std::copy(hi, hi + d, mid_hi);
    std::copy(lo, lo + d, mid_lo);
    const double m = 0.5 * (lo[longest] + hi[longest]);
    mid_hi[longest] = m;
    mid_lo[longest] = m;
    return gl_box(s, d, lo, mid_hi, pieces, depth + 1) + gl_box(s, d, mid_lo, hi, pieces, depth + 1);
  }
  const auto& rule = quad::gauss_legendre(20);
  const int n = static_cast<int>(rule.nodes.size());
  std::array<std::vector<double>, 3> x, w;
  for (int k = 0; k < d; ++k) {
    const double hw = 0.5 * (hi[k] - lo[k]), c = 0.5 * (hi[k] + lo[k]);
    for (int i = 0; i < n; ++i) {
      const double u = c + hw * rule.nodes[i];
      x[k].push_back(u);
      w[k].push_back(hw * rule.weights[i] * (pieces[k]->alpha + pieces[k]->beta * u));
    }
  }
  double total = 0.0;
  if (d == 2) {
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j) row += w[1][j] * std::pow(x[0][i] * x[0][i] + x[1][j] * x[1][j], -0.5 * s);
      total += w[0][i] * row;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      double plane = 0.0;
      for (int j = 0; j < n; ++j) {
        const double r2 = x[0][i] * x[0][i] + x[1][j] * x[1][j];
        double row = 0.0;
        for (int l = 0; l < n; ++l) row += w[2][l] * std::pow(r2 + x[2][l] * x[2][l], -0.5 * s);
        plane += w[1][j] * row;
      }
      total += w[0][i] * plane;
    }
  }
  return total;
}

bool cube_less(const CubeDomain& a, const CubeDomain& b) {
  if (a.side != b.side) return a.side < b.side;
  for (int k = 0; k < a.dim(); ++k)
    if (a.center[k] != b.center[k]) return a.center[k] < b.center[k];
  return false;
}

double sum_sorted(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double acc = 0.0, comp = 0.0;
  for (double t : terms) {  // Neumaier summation
    const double y = acc + t;
    comp += std::abs(acc) >= std::abs(t) ? (acc - y) + t : (t - y) + acc;
    acc = y;
  }
  return acc + comp;
}

}  // namespace

// ---------------------------------------------------------------------------

SignedChargeSystem SignedChargeSystem::from_configuration(const PointConfiguration& config, double weight) {
  SignedChargeSystem sys(config.dim());
  sys.atoms = config;
  sys.atom_weights.assign(config.size(), weight);
  return sys;
}

SignedChargeSystem SignedChargeSystem::from_measure(const UniformMeasure& mu, double sign) {
  SignedChargeSystem sys(mu.domain.dim());
  sys.add_box(mu.domain, sign * mu.intensity);
  return sys;
}

void SignedChargeSystem::add_atom(const Vec& p, double w) {
  atoms.push_back(p);
  atom_weights.push_back(w);
}

void SignedChargeSystem::add_box(const CubeDomain& K, double density) {
  if (K.dim() != dim) throw ParameterError("box dimension mismatch");
  boxes.push_back(K);
  box_weights.push_back(density);
}

void SignedChargeSystem::append(const SignedChargeSystem& other, double scale) {
  if (other.dim != dim) throw ParameterError("charge system dimension mismatch");
  for (std::size_t i = 0; i < other.atom_weights.size(); ++i) add_atom(other.atoms.point(i), scale * other.atom_weights[i]);
  for (std::size_t i = 0; i < other.box_weights.size(); ++i) add_box(other.boxes[i], scale * other.box_weights[i]);
}

SignedChargeSystem SignedChargeSystem::scaled(double a) const {
  SignedChargeSystem out(dim);
  out.append(*this, a);
  return out;
}

double SignedChargeSystem::total_charge() const {
  double q = std::accumulate(atom_weights.begin(), atom_weights.end(), 0.0);
  for (std::size_t i = 0; i < boxes.size(); ++i) q += box_weights[i] * boxes[i].volume();
  return q;
}

Vec SignedChargeSystem::dipole() const {
  Vec D = Vec::Zero(dim);
  for (std::size_t i = 0; i < atom_weights.size(); ++i) D += atom_weights[i] * atoms.point(i);
  for (std::size_t i = 0; i < boxes.size(); ++i) D += box_weights[i] * boxes[i].volume() * boxes[i].center;
  return D;
}

namespace {
// ∫_K |y|^2 dy
double box_second_moment(const CubeDomain& K) {
  const double v = K.volume();
  return v * (K.center.squaredNorm() + K.dim() * K.side * K.side / 12.0);
}
}  // namespace

double SignedChargeSystem::second_moment() const {
  double m = 0.0;
  for (std::size_t i = 0; i < atom_weights.size(); ++i) m += atom_weights[i] * atoms.point(i).squaredNorm();
  for (std::size_t i = 0; i < boxes.size(); ++i) m += box_weights[i] * box_second_moment(boxes[i]);
  return m;
}

double SignedChargeSystem::absolute_second_moment() const {
  double m = 0.0;
  for (std::size_t i = 0; i < atom_weights.size(); ++i) m += std::abs(atom_weights[i]) * atoms.point(i).squaredNorm();
  for (std::size_t i = 0; i < boxes.size(); ++i) m += std::abs(box_weights[i]) * box_second_moment(boxes[i]);
  return m;
}

double SignedChargeSystem::support_radius() const {
  double r = 0.0;
  for (std::size_t i = 0; i < atom_weights.size(); ++i) r = std::max(r, atoms.point(i).norm());
  for (const auto& K : boxes) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) r2 += std::pow(std::max(std::abs(K.lo(k)), std::abs(K.hi(k))), 2);
    r = std::max(r, std::sqrt(r2));
  }
  return r;
}

// ---------------------------------------------------------------------------

double point_cube_integral(const RieszKernel& k, const CubeDomain& K, const Vec& p) {
  require_supported(k);
  const double s = k.s;
  const int d = k.d;
  if (d == 1) {
    auto S = [s](double x) { return sgn(x) * std::pow(std::abs(x), 1.0 - s) / (1.0 - s); };
    return S(K.hi(0) - p[0]) - S(K.lo(0) - p[0]);
  }
  double lo[2], hi[2];
  double total = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    const int m = face_bounds(K, p, axis, lo, hi);
    for (int side = 0; side < 2; ++side) {
      const double h = side == 0 ? K.hi(axis) - p[axis] : p[axis] - K.lo(axis);
      if (h == 0.0) continue;
      total += h * face_integral(s, m, std::abs(h), lo, hi);
    }
  }
  return total / (d - s);
}

Vec point_cube_gradient(const RieszKernel& k, const CubeDomain& K, const Vec& p) {
  Vec g;
  point_cube_value_gradient(k, K, p, &g);
  return g;
}

double point_cube_value_gradient(const RieszKernel& k, const CubeDomain& K, const Vec& p, Vec* grad) {
  require_supported(k);
  const int d = k.d;
  const double s = k.s;
  if (grad) grad->resize(d);
  double lo[2], hi[2];
  double total = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    const int m = face_bounds(K, p, axis, lo, hi);
    const double h_hi = K.hi(axis) - p[axis];
    const double h_lo = p[axis] - K.lo(axis);
    const double f_hi = face_integral(s, m, std::abs(h_hi), lo, hi);
    const double f_lo = face_integral(s, m, std::abs(h_lo), lo, hi);
    if (h_hi != 0.0) total += h_hi * f_hi;
    if (h_lo != 0.0) total += h_lo * f_lo;
    if (grad) (*grad)[axis] = f_lo - f_hi;
  }
  return total / (d - s);
}

double cube_cube_integral(const RieszKernel& k, const CubeDomain& K1_in, const CubeDomain& K2_in) {
  require_supported(k);
  const bool swap = cube_less(K2_in, K1_in);
  const CubeDomain& K1 = swap ? K2_in : K1_in;
  const CubeDomain& K2 = swap ? K1_in : K2_in;
  const double s = k.s;
  const int d = k.d;
  if (d == 1) {
    const double c = 1.0 / ((1.0 - s) * (2.0 - s));
    auto Phi = [&](double t) { return std::pow(std::abs(t), 2.0 - s) * c; };
    const double a1 = K1.lo(0), b1 = K1.hi(0), a2 = K2.lo(0), b2 = K2.hi(0);
    return Phi(b1 - a2) - Phi(a1 - a2) - Phi(b1 - b2) + Phi(a1 - b2);
  }
  if (K1.side == K2.side && K1.center == K2.center) {
    // self-integral: the 2^d orthant corners of u in [-R, R]^d coincide
    double c[3], a[3], b[3];
    for (int j = 0; j < d; ++j) {
      c[j] = K1.side;
      a[j] = K1.side;
      b[j] = -1.0;
    }
    std::vector<double> terms;
    for (int mask = 0; mask < (1 << d); ++mask) {
      int e[3];
      double coef = 1.0;
      for (int j = 0; j < d; ++j) {
        e[j] = (mask >> j) & 1;
        coef *= e[j] ? b[j] : a[j];
      }
      terms.push_back(coef * corner_monomial(s, d, c, e));
    }
    return static_cast<double>(1 << d) * sum_sorted(terms);
  }
  std::array<std::vector<Piece>, 3> pieces;
  for (int j = 0; j < d; ++j) {
    pieces[j] = overlap_pieces(K1.lo(j), K1.hi(j), K2.lo(j), K2.hi(j));
    if (pieces[j].empty()) return 0.0;
  }
  std::vector<double> terms;
  std::array<std::size_t, 3> idx{0, 0, 0};
  while (true) {
    const Piece* sel[3];
    double lo[3], hi[3];
    bool corner = true;
    for (int j = 0; j < d; ++j) {
      sel[j] = &pieces[j][idx[j]];
      lo[j] = sel[j]->lo;
      hi[j] = sel[j]->hi;
      if (!(lo[j] == 0.0 || hi[j] == 0.0)) corner = false;
    }
    if (corner) {
      // reflect to the positive orthant and expand the overlap product in monomials
      double c[3], a[3], b[3];
      for (int j = 0; j < d; ++j) {
        const double sigma = lo[j] == 0.0 ? 1.0 : -1.0;
        c[j] = hi[j] - lo[j];
        a[j] = sel[j]->alpha;
        b[j] = sel[j]->beta * sigma;
      }
      for (int mask = 0; mask < (1 << d); ++mask) {
        int e[3];
        double coef = 1.0;
        for (int j = 0; j < d; ++j) {
          e[j] = (mask >> j) & 1;
          coef *= e[j] ? b[j] : a[j];
        }
        if (coef == 0.0) continue;
        terms.push_back(coef * corner_monomial(s, d, c, e));
      }
    } else {
      terms.push_back(gl_box(s, d, lo, hi, sel, 0));
    }
    int j = 0;
    while (j < d && ++idx[j] == pieces[j].size()) idx[j++] = 0;
    if (j == d) break;
  }
  return sum_sorted(terms);
}

double pairing(const RieszKernel& k, const SignedChargeSystem& mu, const SignedChargeSystem& nu, bool off_diagonal) {
  if (mu.dim != k.d || nu.dim != k.d) throw ParameterError("pairing: dimension mismatch");
  std::vector<double> terms;
  for (std::size_t i = 0; i < mu.atom_weights.size(); ++i) {
    const Vec p = mu.atoms.point(i);
    for (std::size_t j = 0; j < nu.atom_weights.size(); ++j) {
      const double r = (p - nu.atoms.point(j)).norm();
      if (r == 0.0) {
        if (off_diagonal) continue;
        throw SingularPairError("pairing: coincident atoms");
      }
      terms.push_back(mu.atom_weights[i] * nu.atom_weights[j] * k.radial(r));
    }
    for (std::size_t j = 0; j < nu.box_weights.size(); ++j)
      terms.push_back(mu.atom_weights[i] * nu.box_weights[j] * point_cube_integral(k, nu.boxes[j], p));
  }
  for (std::size_t i = 0; i < mu.box_weights.size(); ++i) {
    for (std::size_t j = 0; j < nu.atom_weights.size(); ++j)
      terms.push_back(mu.box_weights[i] * nu.atom_weights[j] * point_cube_integral(k, mu.boxes[i], nu.atoms.point(j)));
    for (std::size_t j = 0; j < nu.box_weights.size(); ++j)
      terms.push_back(mu.box_weights[i] * nu.box_weights[j] * cube_cube_integral(k, mu.boxes[i], nu.boxes[j]));
  }
  return sum_sorted(terms);
}

double potential_h(const RieszKernel& k, const SignedChargeSystem& sys, const Vec& x) {
  double v = 0.0;
  for (std::size_t i = 0; i < sys.atom_weights.size(); ++i) v += sys.atom_weights[i] * k(x, sys.atoms.point(i));
  for (std::size_t i = 0; i < sys.box_weights.size(); ++i)
    v += sys.box_weights[i] * point_cube_integral(k, sys.boxes[i], x);
  return v;
}

// ---------------------------------------------------------------------------

MultipoleCell make_multipole_cell(const RieszKernel& k, const SignedChargeSystem& sys, double cell_side) {
  MultipoleCell c;
  c.support_radius = std::max(2.0 * std::sqrt(static_cast<double>(k.d)) * cell_side, 4.0 * sys.support_radius());
  c.monopole = sys.total_charge();
  c.dipole = sys.dipole();
  c.remainder_constant = k.s * (k.s + 2.0) + 1.0;
  c.abs_second_moment = sys.absolute_second_moment();
  return c;
}

TailEstimate multipole_tail(const MultipoleCell& cell, const RieszKernel& k, const Vec& x) {
  const double r = x.norm();
  if (r < cell.support_radius) throw DomainError("multipole_tail: evaluation point inside the expansion radius");
  TailEstimate t;
  t.value = cell.monopole * std::pow(r, -k.s) + k.s * cell.dipole.dot(x) * std::pow(r, -k.s - 2.0);
  t.bound = cell.remainder_constant * cell.abs_second_moment * std::pow(r, -k.s - 2.0);
  return t;
}

// ---------------------------------------------------------------------------

NetPotentialResult net_potential_integral(const RieszKernel& k, const SignedChargeSystem& sys) {
  require_supported(k);
  const int d = k.d;
  const double s = k.s;
  NetPotentialResult res;
  double scale = 0.0;
  for (double w : sys.atom_weights) scale += std::abs(w);
  for (std::size_t i = 0; i < sys.boxes.size(); ++i) scale += std::abs(sys.box_weights[i]) * sys.boxes[i].volume();
  if (scale == 0.0) return res;
  const double rs = sys.support_radius();
  if (std::abs(sys.total_charge()) > 1e-10 * scale) throw DomainError("net_potential_integral: system is not neutral");
  if (sys.dipole().norm() > 1e-10 * scale * std::max(rs, 1.0))
    throw DomainError("net_potential_integral: nonzero dipole moment");
  if (s < d - 2.0) throw DomainError("net_potential_integral: divergent for s < d - 2");
  const double b = 0.5 * s - 0.5 * d + 1.0;
  if (std::abs(b) < 1e-14) {
    res.conditional = true;
    res.warnings.push_back("s = d - 2: integral is conditionally convergent; shell-wise summation used");
  }
  const double rho = std::max(2.0 * std::sqrt(static_cast<double>(d)) * rs, 1e-300);
  res.split_radius = rho;
  const double area = sphere_area(d);

  auto near = [&](double a) {
    if (a == 0.0) return area * std::pow(rho, d - s) / (d - s);
    if (d == 1) return (std::pow(rho - a, 1.0 - s) + std::pow(rho + a, 1.0 - s)) / (1.0 - s);
    const double sub = sphere_area(d - 1);
    return sub * quad::gk(
                     [&](double th) {
                       const double c = std::cos(th), sn = std::sin(th);
                       const double L = -a * c + std::sqrt(rho * rho - a * a * sn * sn);
                       return std::pow(L, d - s) / (d - s) * std::pow(sn, d - 2);
                     },
                     0.0, std::numbers::pi, kQuadTol);
  };
  auto far = [&](double a) {
    if (res.conditional || a == 0.0) return 0.0;
    const double t2 = (a / rho) * (a / rho);
    double coef = 1.0, pw = 1.0, sum = 0.0;
    for (int kk = 1; kk < 2000; ++kk) {
      coef *= (0.5 * s + kk - 1) * (b + kk - 1) / ((0.5 * d + kk - 1) * kk);
      pw *= t2;
      const double term = coef * pw / (2.0 * kk + s - d);
      sum += term;
      if (kk > 3 && std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return area * std::pow(rho, d - s) * sum;
  };

  double near_total = 0.0, far_total = 0.0;
  for (std::size_t i = 0; i < sys.atom_weights.size(); ++i) {
    const double a = sys.atoms.point(i).norm();
    near_total += sys.atom_weights[i] * near(a);
    far_total += sys.atom_weights[i] * far(a);
  }
  const auto& rule = quad::gauss_legendre(20);
  const int n = static_cast<int>(rule.nodes.size());
  for (std::size_t bi = 0; bi < sys.boxes.size(); ++bi) {
    const CubeDomain& K = sys.boxes[bi];
    const double hw = 0.5 * K.side;
    double bn = 0.0, bf = 0.0;
    std::array<int, 3> idx{0, 0, 0};
    while (true) {
      double r2 = 0.0, w = 1.0;
      for (int j = 0; j < d; ++j) {
        const double y = K.center[j] + hw * rule.nodes[idx[j]];
        r2 += y * y;
        w *= hw * rule.weights[idx[j]];
      }
      const double a = std::sqrt(r2);
      bn += w * near(a);
      bf += w * far(a);
      int j = 0;
      while (j < d && ++idx[j] == n) idx[j++] = 0;
      if (j == d) break;
    }
    near_total += sys.box_weights[bi] * bn;
    far_total += sys.box_weights[bi] * bf;
  }
  res.near_field = near_total;
  res.far_field = far_total;
  res.value = near_total + far_total;
  res.far_field_bound = res.conditional ? kInf
                                        : area * (s * (s + 2.0) + 1.0) * sys.absolute_second_moment() *
                                              std::pow(rho, d - s - 2.0) / (s + 2.0 - d);
  return res;
}

// ---------------------------------------------------------------------------

namespace {

// sin(x)/x - 1 without cancellation
double sinc_m1(double x) {
  const double x2 = x * x;
  if (std::abs(x) < 0.1)
    return x2 * (-1.0 / 6 + x2 * (1.0 / 120 + x2 * (-1.0 / 5040 + x2 * (1.0 / 362880 - x2 / 39916800.0))));
  return std::sin(x) / x - 1.0;
}

std::vector<Vec> probe_directions(int d) {
  std::vector<Vec> dirs;
  for (int k = 0; k < d; ++k) {
    Vec e = Vec::Zero(d);
    e[k] = 1.0;
    dirs.push_back(e);
  }
  if (d == 2 || d == 3) {
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        for (double sg : {1.0, -1.0}) {
          Vec e = Vec::Zero(d);
          e[i] = 1.0;
          e[j] = sg;
          dirs.push_back(e / std::sqrt(2.0));
        }
  }
  if (d == 3) {
    for (double s1 : {1.0, -1.0})
      for (double s2 : {1.0, -1.0}) {
        Vec e(3);
        e << 1.0, s1, s2;
        dirs.push_back(e / std::sqrt(3.0));
      }
  }
  return dirs;
}

// Im σ^(ξ)
double im_transform(const SignedChargeSystem& sys, const Vec& xi) {
  double v = 0.0;
  for (std::size_t i = 0; i < sys.atom_weights.size(); ++i) v -= sys.atom_weights[i] * std::sin(xi.dot(sys.atoms.point(i)));
  for (std::size_t i = 0; i < sys.boxes.size(); ++i) {
    const CubeDomain& K = sys.boxes[i];
    double P = 1.0;
    for (int j = 0; j < sys.dim; ++j) P *= 1.0 + sinc_m1(0.5 * xi[j] * K.side);
    v -= sys.box_weights[i] * K.volume() * P * std::sin(xi.dot(K.center));
  }
  return v;
}

// Re(σ^(ξ) - total charge), accurate for small ξ
double re_transform_deficit(const SignedChargeSystem& sys, const Vec& xi) {
  double v = 0.0;
  for (std::size_t i = 0; i < sys.atom_weights.size(); ++i) {
    const double th = xi.dot(sys.atoms.point(i));
    const double sh = std::sin(0.5 * th);
    v += sys.atom_weights[i] * (-2.0 * sh * sh);
  }
  for (std::size_t i = 0; i < sys.boxes.size(); ++i) {
    const CubeDomain& K = sys.boxes[i];
    double lg = 0.0;
    for (int j = 0; j < sys.dim; ++j) lg += std::log1p(sinc_m1(0.5 * xi[j] * K.side));
    const double pm1 = std::expm1(lg);
    const double sh = std::sin(0.5 * xi.dot(K.center));
    v += sys.box_weights[i] * K.volume() * (-2.0 * sh * sh * (1.0 + pm1) + pm1);
  }
  return v;
}

}  // namespace

FourierLimit fourier_zero_limit(const RieszKernel& k, const SignedChargeSystem& sys, std::vector<double> xi_sequence) {
  FourierLimit out;
  if (xi_sequence.empty())
    for (int j = 4; j <= 20; ++j) xi_sequence.push_back(std::ldexp(1.0, -j));
  const int d = k.d;
  const double s = k.s;
  double scale = 0.0;
  for (double w : sys.atom_weights) scale += std::abs(w);
  for (std::size_t i = 0; i < sys.boxes.size(); ++i) scale += std::abs(sys.box_weights[i]) * sys.boxes[i].volume();
  if (std::abs(sys.total_charge()) > 1e-10 * std::max(scale, 1e-300)) {
    out.warnings.push_back("system is not neutral: the expression diverges like |xi|^{s-d}");
  }
  if (sys.dipole().norm() > 1e-10 * std::max(scale, 1e-300) * std::max(sys.support_radius(), 1.0)) {
    out.dipole_flag = true;
    out.warnings.push_back("nonzero dipole: the expression diverges like |xi|^{s-d+1}");
  }
  const double cft = fourier_constant(k);
  const auto dirs = probe_directions(d);
  for (double x : xi_sequence) {
    double avg = 0.0, im = 0.0;
    for (const auto& e : dirs) {
      avg += re_transform_deficit(sys, x * e);
      im += std::abs(im_transform(sys, x * e));
    }
    avg /= static_cast<double>(dirs.size());
    im /= static_cast<double>(dirs.size());
    out.xi.push_back(x);
    out.values.push_back(cft * std::pow(x, s - d) * avg);
    out.imag_values.push_back(cft * std::pow(x, s - d) * im);
  }
  // Richardson on the geometric sequence; correction exponents s-d+2j.
  std::vector<double> cur = out.values;
  std::vector<double> exps;
  const double q1 = s - d + 2.0;
  if (q1 > 1e-12) exps.push_back(q1);
  exps.push_back(s - d + 4.0);
  exps.push_back(s - d + 6.0);
  exps.resize(2);
  for (double q : exps) {
    if (cur.size() < 3) break;
    std::vector<double> next;
    for (std::size_t j = 0; j + 1 < cur.size(); ++j) {
      const double ratio = out.xi[j] / out.xi[j + 1];
      const double f = std::pow(ratio, q);
      next.push_back((f * cur[j + 1] - cur[j]) / (f - 1.0));
    }
    cur = std::move(next);
  }
  out.estimate = cur.back();
  out.error = cur.size() >= 2 ? std::abs(cur.back() - cur[cur.size() - 2]) : std::abs(out.values.back());
  if (out.dipole_flag) out.error = std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace rieszlab

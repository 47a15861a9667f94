#include "rieszlab/jellium.hpp"

#include "rieszlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

namespace rieszlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_config(const RieszKernel& k, const PointConfiguration& config) {
  if (config.dim() != k.d) throw ParameterError("configuration dimension does not match the kernel");
}

// Σ_{i≠j} c and its gradient; a positive eta caps the kernel at eta^{-s}.
double pair_energy(const RieszKernel& k, const std::vector<double>& x, int d, double eta, std::vector<double>* grad) {
  const std::size_t n = x.size() / d;
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double diff[kMaxDim];
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        diff[a] = x[i * d + a] - x[j * d + a];
        r2 += diff[a] * diff[a];
      }
      const double r = std::sqrt(r2);
      if (eta > 0.0 && r < eta) {
        e += 2.0 * std::pow(eta, -k.s);
        continue;
      }
      if (r == 0.0) throw SingularPairError("singular pair: coincident points");
      const double c = std::pow(r, -k.s);
      e += 2.0 * c;
      if (grad) {
        const double f = -2.0 * k.s * c / r2;  // ∂/∂x_i of 2 c(|x_i - x_j|)
        for (int a = 0; a < d; ++a) {
          (*grad)[i * d + a] += f * diff[a];
          (*grad)[j * d + a] -= f * diff[a];
        }
      }
    }
  }
  return e;
}

// -2 Σ_i ∫_K c(x_i - y) dy and its gradient
double attraction_energy(const RieszKernel& k, const CubeDomain& K, const std::vector<double>& x, int d,
                         std::vector<double>* grad) {
  const std::size_t n = x.size() / d;
  std::vector<double> vals(n);
  std::vector<Vec> grads(n);
  parallel_for(n, [&](std::size_t i) {
    Vec p(d);
    for (int a = 0; a < d; ++a) p[a] = x[i * d + a];
    vals[i] = point_cube_value_gradient(k, K, p, grad ? &grads[i] : nullptr);
  });
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e -= 2.0 * vals[i];
    if (grad)
      for (int a = 0; a < d; ++a) (*grad)[i * d + a] -= 2.0 * grads[i][a];
  }
  return e;
}

struct LbfgsOutcome {
  double f = kInf;
  double pg_norm = kInf;
  int iterations = 0;
  bool converged = false;
};

// Projected L-BFGS on the box [lo, hi] (per coordinate).
template <class Obj>
LbfgsOutcome projected_lbfgs(Obj&& obj, std::vector<double>& x, const std::vector<double>& lo,
                             const std::vector<double>& hi, double tol, int max_iter, double max_step) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  std::vector<double> g(n), gn(n), xn(n), dir(n), pg(n);
  LbfgsOutcome out;
  double f = obj(x, g);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> mem;
  const std::size_t m = 10;
  auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  };
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it;
    double pgn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool blocked = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
      pg[i] = blocked ? 0.0 : g[i];
      pgn = std::max(pgn, std::abs(pg[i]));
    }
    out.f = f;
    out.pg_norm = pgn;
    if (pgn <= tol) {
      out.converged = true;
      return out;
    }
    // two-loop recursion on the free gradient
    dir = pg;
    std::vector<double> alpha(mem.size());
    for (std::size_t j = mem.size(); j-- > 0;) {
      const auto& [s, y] = mem[j];
      alpha[j] = dot(s, dir) / dot(y, s);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[j] * y[i];
    }
    if (!mem.empty()) {
      const auto& [s, y] = mem.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t j = 0; j < mem.size(); ++j) {
      const auto& [s, y] = mem[j];
      const double beta = dot(y, dir) / dot(y, s);
      for (std::size_t i = 0; i < n; ++i) dir[i] += s[i] * (alpha[j] - beta);
    }
    for (std::size_t i = 0; i < n; ++i) {
      dir[i] = pg[i] == 0.0 ? 0.0 : -dir[i];
    }
    if (dot(dir, pg) >= 0.0 || mem.empty()) {
      if (!mem.empty()) mem.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -pg[i];
    }
    double dmax = 0.0;
    for (double v : dir) dmax = std::max(dmax, std::abs(v));
    double step = mem.empty() ? std::min(1.0, max_step / dmax) : std::min(1.0, max_step / dmax);
    bool accepted = false;
    double fn = kInf;
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = std::clamp(x[i] + step * dir[i], lo[i], hi[i]);
      std::fill(gn.begin(), gn.end(), 0.0);
      try {
        fn = obj(xn, gn);
      } catch (const SingularPairError&) {
        fn = kInf;
      }
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (xn[i] - x[i]);
      const double noise = 1e-13 * std::max(1.0, std::abs(f));
      if (std::isfinite(fn) && fn <= f + 1e-4 * decrease + noise) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      return out;  // stalled at numerical resolution
    }
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      mem.emplace_back(std::move(s), std::move(y));
      if (mem.size() > m) mem.pop_front();
    }
    x.swap(xn);
    g.swap(gn);
    f = fn;
  }
  out.iterations = max_iter;
  return out;
}

PointConfiguration initial_configuration(const CubeDomain& K, int N, std::uint64_t seed, int restart) {
  const int d = K.dim();
  int n = 1;
  while (std::pow(static_cast<double>(n), d) < N - 1e-9) ++n;
  std::size_t cells = 1;
  for (int a = 0; a < d; ++a) cells *= static_cast<std::size_t>(n);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(cells);
  for (std::size_t i = 0; i < cells; ++i) order[i] = i;
  if (cells > static_cast<std::size_t>(N)) std::shuffle(order.begin(), order.end(), rng);
  order.resize(N);
  std::sort(order.begin(), order.end());
  const double h = K.side / n;
  const double amp = restart == 0 ? 0.02 * h : 0.15 * h;
  std::uniform_real_distribution<double> jitter(-amp, amp);
  PointConfiguration config(d);
  for (std::size_t c : order) {
    Vec p(d);
    std::size_t rem = c;
    for (int a = 0; a < d; ++a) {
      p[a] = K.lo(a) + (static_cast<double>(rem % n) + 0.5) * h + jitter(rng);
      rem /= n;
    }
    config.push_back(p);
  }
  return config;
}

struct BoxBounds {
  std::vector<double> lo, hi;
};

BoxBounds box_bounds(const CubeDomain& K, std::size_t n) {
  const int d = K.dim();
  const double delta = 1e-9 * K.side;
  BoxBounds b;
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      b.lo.push_back(K.lo(a) + delta);
      b.hi.push_back(K.hi(a) - delta);
    }
  return b;
}

MinimizationResult finish(const RieszKernel& k, const CubeDomain& K, std::vector<double> x, double bg,
                          const LbfgsOutcome& o) {
  MinimizationResult r;
  r.cube = K;
  r.configuration = PointConfiguration(k.d, std::move(x));
  r.energy = e_jel(k, K, r.configuration, bg);
  r.separation = r.configuration.min_separation();
  r.converged = o.converged;
  r.gradient_norm = o.pg_norm;
  r.iterations = o.iterations;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

double pair_sum(const RieszKernel& k, const PointConfiguration& config) {
  check_config(k, config);
  return pair_energy(k, config.coords(), k.d, 0.0, nullptr);
}

EnergyBreakdown e_jel(const RieszKernel& k, const CubeDomain& K, const PointConfiguration& config,
                      double background_self) {
  check_config(k, config);
  EnergyBreakdown e;
  e.pair_sum = pair_energy(k, config.coords(), k.d, 0.0, nullptr);
  e.attraction = -0.5 * attraction_energy(k, K, config.coords(), k.d, nullptr);
  e.background_self = background_self;
  e.total = e.pair_sum - 2.0 * e.attraction + e.background_self;
  e.jellium_mode = true;
  return e;
}

EnergyBreakdown e_jel(const RieszKernel& k, const CubeDomain& K, const PointConfiguration& config) {
  return e_jel(k, K, config, cube_cube_integral(k, K, K));
}

std::vector<double> e_jel_gradient(const RieszKernel& k, const CubeDomain& K, const PointConfiguration& config) {
  check_config(k, config);
  std::vector<double> g(config.coords().size(), 0.0);
  pair_energy(k, config.coords(), k.d, 0.0, &g);
  attraction_energy(k, K, config.coords(), k.d, &g);
  return g;
}

EnergyBreakdown e_ueg(const RieszKernel& k, const SignedChargeSystem& mu, const PointConfiguration& config) {
  check_config(k, config);
  for (double w : mu.atom_weights)
    if (w < 0.0) throw ParameterError("e_ueg: background must be nonnegative");
  for (double w : mu.box_weights)
    if (w < 0.0) throw ParameterError("e_ueg: background must be nonnegative");
  EnergyBreakdown e;
  e.pair_sum = pair_energy(k, config.coords(), k.d, 0.0, nullptr);
  e.attraction = pairing(k, mu, SignedChargeSystem::from_configuration(config), false);
  e.background_self = pairing(k, mu, mu, false);
  e.total = e.pair_sum - e.background_self;
  e.jellium_mode = false;
  return e;
}

EnergyBreakdown e_ueg(const RieszKernel& k, const UniformMeasure& mu, const PointConfiguration& config) {
  return e_ueg(k, SignedChargeSystem::from_measure(mu), config);
}

double jel_ueg_gap(const RieszKernel& k, const SignedChargeSystem& mu, const PointConfiguration& config) {
  check_config(k, config);
  SignedChargeSystem diff = SignedChargeSystem::from_configuration(config);
  diff.append(mu, -1.0);
  return 2.0 * pairing(k, mu, diff, false);
}

double jel_ueg_gap(const RieszKernel& k, const UniformMeasure& mu, const PointConfiguration& config) {
  return jel_ueg_gap(k, SignedChargeSystem::from_measure(mu), config);
}

// ---------------------------------------------------------------------------

MinimizationResult refine_jellium(const RieszKernel& k, const CubeDomain& K, const PointConfiguration& start,
                                  const MinimizeOptions& opts) {
  check_config(k, start);
  const double bg = cube_cube_integral(k, K, K);
  std::vector<double> x = start.coords();
  const auto b = box_bounds(K, start.size());
  const double spacing = K.side / std::pow(std::max<double>(1.0, start.size()), 1.0 / k.d);
  auto obj = [&](const std::vector<double>& y, std::vector<double>& g) {
    std::fill(g.begin(), g.end(), 0.0);
    return pair_energy(k, y, k.d, 0.0, &g) + attraction_energy(k, K, y, k.d, &g) + bg;
  };
  const auto o = projected_lbfgs(obj, x, b.lo, b.hi, opts.gradient_tolerance, opts.max_iterations, 0.1 * spacing);
  auto r = finish(k, K, std::move(x), bg, o);
  r.restarts_used = 1;
  return r;
}

MinimizationResult minimize_jellium(const RieszKernel& k, const CubeDomain& K, int N, const MinimizeOptions& opts) {
  if (K.dim() != k.d) throw ParameterError("cube dimension does not match the kernel");
  if (N < 0) throw ParameterError("N must be nonnegative");
  if (opts.restarts < 1) throw ParameterError("restart budget must be positive");
  const double bg = cube_cube_integral(k, K, K);
  if (N == 0) {
    LbfgsOutcome o;
    o.converged = true;
    o.pg_norm = 0.0;
    auto r = finish(k, K, {}, bg, o);
    r.restarts_used = 1;
    return r;
  }
  const double spacing = K.side / std::pow(static_cast<double>(N), 1.0 / k.d);
  const auto b = box_bounds(K, static_cast<std::size_t>(N));
  std::vector<MinimizationResult> runs(opts.restarts);
  parallel_for(static_cast<std::size_t>(opts.restarts), [&](std::size_t r) {
    std::vector<double> x = initial_configuration(K, N, opts.seed, static_cast<int>(r)).coords();
    if (opts.anneal) {
      // capped-kernel stages while the cap could be active
      double eta = 0.1 * spacing;
      while (eta > 1e-3 * spacing) {
        PointConfiguration cur(k.d, x);
        if (cur.min_separation() > eta) break;
        auto capped = [&](const std::vector<double>& y, std::vector<double>& g) {
          std::fill(g.begin(), g.end(), 0.0);
          return pair_energy(k, y, k.d, eta, &g) + attraction_energy(k, K, y, k.d, &g) + bg;
        };
        projected_lbfgs(capped, x, b.lo, b.hi, 1e-4, opts.max_iterations, 0.1 * spacing);
        eta *= 0.5;
      }
    }
    auto exact = [&](const std::vector<double>& y, std::vector<double>& g) {
      std::fill(g.begin(), g.end(), 0.0);
      return pair_energy(k, y, k.d, 0.0, &g) + attraction_energy(k, K, y, k.d, &g) + bg;
    };
    const auto o = projected_lbfgs(exact, x, b.lo, b.hi, opts.gradient_tolerance, opts.max_iterations, 0.1 * spacing);
    runs[r] = finish(k, K, std::move(x), bg, o);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].energy.total < runs[best].energy.total) best = r;
  MinimizationResult out = std::move(runs[best]);
  out.restarts_used = opts.restarts;
  return out;
}

// ---------------------------------------------------------------------------

double separation_radius(const RieszKernel& k, double epsilon) {
  if (k.d < 3) throw UnsupportedError("separation radius is only available for d >= 3");
  if (!(epsilon > 0.0 && epsilon < 2.0)) throw ParameterError("separation margin must satisfy 0 < epsilon < 2");
  const int d = k.d;
  const double rB = std::pow(d / sphere_area(d), 1.0 / d);
  return rB * std::pow(4.0 * d / epsilon + 1.0, -1.0 / (d - 2));
}

SeparationCertificate check_separation(const PointConfiguration& config, const CubeDomain& K, const RieszKernel& k,
                                       double epsilon) {
  SeparationCertificate c;
  c.min_distance = config.min_separation();
  if (k.d < 3) {
    c.note = "unsupported: no separation radius for d < 3";
    return c;
  }
  if (!(epsilon > 0.0 && epsilon < 2.0) || k.s < k.d - 2.0 || k.s > k.d - epsilon) {
    c.note = "not applicable: requires 0 < epsilon < 2 and d-2 <= s <= d-epsilon";
    return c;
  }
  if (std::abs(K.volume() - static_cast<double>(config.size())) > 1e-9 * std::max(1.0, K.volume())) {
    c.note = "not applicable: cube volume must equal N";
    return c;
  }
  c.applicable = true;
  c.threshold = separation_radius(k, epsilon);
  if (config.size() <= 1) {
    c.vacuous = true;
    c.passed = true;
    c.note = "vacuous: fewer than two points";
    return c;
  }
  c.passed = c.min_distance >= c.threshold;
  return c;
}

SeparationCertificate check_separation(const MinimizationResult& result, const RieszKernel& k, double epsilon) {
  return check_separation(result.configuration, result.cube, k, epsilon);
}

double jellium_lower_bound(const RieszKernel& k, int N) { return -4.0 * N * sphere_area(k.d) / (k.d - k.s); }

}  // namespace rieszlab

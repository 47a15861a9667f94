#include "rieszlab/decomposition.hpp"

#include "rieszlab/parallel.hpp"
#include "rieszlab/quadrature.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

namespace rieszlab {

namespace {

// 53-bit uniform in [0, 1) from the raw engine output (portable across standard libraries)
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void shuffle(std::vector<std::uint32_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

// Uniform hash grid over one family's centers with cell size 2 r.
class FamilyGrid {
 public:
  FamilyGrid(const CubeDomain& Q, double r) : d_(Q.dim()), r_(r), h_(2.0 * r), lower_(Q.lower()) {
    cells_ = static_cast<long>(std::ceil(Q.side / h_)) + 1;
  }

  double radius() const { return r_; }

  void insert(const Vec& c, std::uint32_t id) { table_[key(cell_of(c))].push_back(id); }

  // Visits ids whose cells lie within `reach` of x (per axis).
  template <class F>
  void visit(const Vec& x, double reach, F&& f) const {
    const auto c = cell_of(x);
    const long span = static_cast<long>(std::ceil(reach / h_));
    std::vector<long> lo(d_), hi(d_), cur(d_);
    for (int a = 0; a < d_; ++a) {
      lo[a] = std::max(0L, c[a] - span);
      hi[a] = std::min(cells_ - 1, c[a] + span);
      cur[a] = lo[a];
    }
    while (true) {
      auto it = table_.find(key(cur));
      if (it != table_.end())
        for (std::uint32_t id : it->second) f(id);
      int a = 0;
      while (a < d_ && ++cur[a] > hi[a]) {
        cur[a] = lo[a];
        ++a;
      }
      if (a == d_) return;
    }
  }

 private:
  std::vector<long> cell_of(const Vec& x) const {
    std::vector<long> c(d_);
    for (int a = 0; a < d_; ++a)
      c[a] = std::clamp(static_cast<long>(std::floor((x[a] - lower_[a]) / h_)), 0L, cells_ - 1);
    return c;
  }
  std::uint64_t key(const std::vector<long>& c) const {
    std::uint64_t k = 0;
    for (int a = d_ - 1; a >= 0; --a) k = k * static_cast<std::uint64_t>(cells_) + static_cast<std::uint64_t>(c[a]);
    return k;
  }

  int d_;
  double r_, h_;
  Vec lower_;
  long cells_ = 1;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> table_;
};

void check_ladder(int d, const std::vector<double>& ladder) {
  if (d < 2) throw ParameterError("swiss cheese packing needs d >= 2");
  if (ladder.empty()) throw ParameterError("swiss cheese: empty radius ladder");
  const double f = cheese_ladder_factor(d);
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0)) throw ParameterError("swiss cheese: radii must be positive");
    if (i > 0 && !(ladder[i] > f * ladder[i - 1]))
      throw ParameterError("swiss cheese: radius " + std::to_string(i + 1) + " must exceed " + std::to_string(f) +
                           " times the previous one");
  }
}

bool overlaps(const Ball& a, const Vec& c, double r) {
  const double lim = a.radius + r;
  return (a.center - c).squaredNorm() <= lim * lim;
}

}  // namespace

// ---------------------------------------------------------------------------

double cheese_constant(int d) { return std::pow(2.0, d + 1) / ball_volume(d); }

double cheese_ladder_factor(int d) { return 1.0 + 4.0 * std::sqrt(static_cast<double>(d)) * ball_volume(d); }

double cheese_min_side(int d, const std::vector<double>& ladder) {
  return 8.0 * std::sqrt(static_cast<double>(d)) * ball_volume(d) * (ladder.size() + cheese_constant(d)) * ladder.back();
}

std::uint64_t BallPacking::digest() const {
  std::uint64_t h = fnv1a64(nullptr, 0);
  for (const Ball& b : balls) {
    h = fnv1a64(b.center.data(), sizeof(double) * b.center.size(), h);
    h = fnv1a64(&b.radius, sizeof(double), h);
    const std::int32_t f = b.family;
    h = fnv1a64(&f, sizeof(f), h);
  }
  return h;
}

std::string BallPacking::to_json() const {
  nlohmann::json j;
  j["cube"] = {{"center", std::vector<double>(cube.center.data(), cube.center.data() + cube.dim())}, {"side", cube.side}};
  j["ladder"] = ladder;
  j["seed"] = seed;
  j["counts"] = counts;
  j["digest"] = hex64(digest());
  j["certificate"] = {{"disjoint", certificate.disjoint},
                      {"contained", certificate.contained},
                      {"density_window", certificate.density_window},
                      {"densities", certificate.densities},
                      {"window", {certificate.window_lo, certificate.window_hi}}};
  nlohmann::json arr = nlohmann::json::array();
  for (const Ball& b : balls) {
    nlohmann::json e = std::vector<double>(b.center.data(), b.center.data() + b.center.size());
    e.push_back(b.radius);
    e.push_back(b.family);
    arr.push_back(std::move(e));
  }
  j["balls"] = std::move(arr);
  return j.dump();
}

PackingCertificate verify_packing(const CubeDomain& Q, const std::vector<double>& ladder, const std::vector<Ball>& balls) {
  const int d = Q.dim();
  const int M = static_cast<int>(ladder.size());
  PackingCertificate cert;
  cert.window_lo = 1.0 / (M + cheese_constant(d) + 1.0);
  cert.window_hi = 1.0 / (M + cheese_constant(d));
  cert.contained = true;
  cert.disjoint = true;
  std::vector<FamilyGrid> grids;
  for (double r : ladder) grids.emplace_back(Q, r);
  std::vector<double> volume(M, 0.0);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const Ball& b = balls[i];
    if (b.family < 0 || b.family >= M || b.radius != ladder[b.family]) {
      cert.contained = false;
      continue;
    }
    for (int a = 0; a < d; ++a)
      if (!(b.center[a] - b.radius >= Q.lo(a) && b.center[a] + b.radius <= Q.hi(a))) cert.contained = false;
    volume[b.family] += ball_volume(d) * std::pow(b.radius, d);
    grids[b.family].insert(b.center, static_cast<std::uint32_t>(i));
  }
  for (std::size_t i = 0; i < balls.size() && cert.disjoint; ++i) {
    const Ball& b = balls[i];
    for (const auto& g : grids)
      g.visit(b.center, b.radius + g.radius(), [&](std::uint32_t j) {
        if (j != i && overlaps(balls[j], b.center, b.radius)) cert.disjoint = false;
      });
  }
  cert.density_window = true;
  for (int f = 0; f < M; ++f) {
    const double c = volume[f] / Q.volume();
    cert.densities.push_back(c);
    if (!(c > cert.window_lo && c < cert.window_hi)) cert.density_window = false;
  }
  return cert;
}

BallPacking swiss_cheese(const CubeDomain& Q, const std::vector<double>& ladder, const SwissCheeseOptions& opts) {
  const int d = Q.dim();
  check_ladder(d, ladder);
  const double min_side = cheese_min_side(d, ladder);
  if (!(Q.side > min_side))
    throw ParameterError("swiss cheese: cube side must exceed " + std::to_string(min_side));
  if (opts.seed_budget < 1) throw ParameterError("swiss cheese: seed budget must be positive");
  const int M = static_cast<int>(ladder.size());
  const double lo_w = 1.0 / (M + cheese_constant(d) + 1.0);
  const double hi_w = 1.0 / (M + cheese_constant(d));
  std::vector<std::size_t> target(M);
  for (int f = 0; f < M; ++f) {
    const double ball = ball_volume(d) * std::pow(ladder[f], d);
    target[f] = static_cast<std::size_t>(std::llround(0.5 * (lo_w + hi_w) * Q.volume() / ball));
    const double c = target[f] * ball / Q.volume();
    if (!(c > lo_w && c < hi_w)) throw ConstructionError("swiss cheese: no integer ball count hits the density window");
  }
  std::vector<double> achieved;
  for (int attempt = 0; attempt < opts.seed_budget; ++attempt) {
    const std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(attempt);
    std::mt19937_64 rng(seed);
    BallPacking P;
    P.cube = Q;
    P.ladder = ladder;
    P.seed = seed;
    P.counts.assign(M, 0);
    std::vector<FamilyGrid> grids;
    for (double r : ladder) grids.emplace_back(Q, r);
    bool ok = true;
    achieved.assign(M, 0.0);
    for (int f = M - 1; f >= 0 && ok; --f) {
      const double r = ladder[f];
      const double spacing = 2.0 * r * 1.05;
      const double jitter = 0.025 * r;
      const long per_axis = static_cast<long>(std::floor((Q.side - 2.0 * r) / spacing));
      if (per_axis < 1) {
        ok = false;
        break;
      }
      std::size_t total = 1;
      for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(per_axis);
      std::vector<std::uint32_t> order(total);
      for (std::size_t i = 0; i < total; ++i) order[i] = static_cast<std::uint32_t>(i);
      shuffle(order, rng);
      const double margin = 0.5 * (Q.side - 2.0 * r - per_axis * spacing);
      for (std::uint32_t idx : order) {
        if (P.counts[f] == target[f]) break;
        Vec c(d);
        std::size_t rem = idx;
        for (int a = 0; a < d; ++a) {
          const double base = Q.lo(a) + r + margin + (static_cast<double>(rem % per_axis) + 0.5) * spacing;
          rem /= per_axis;
          c[a] = std::clamp(base + jitter * (2.0 * unit(rng) - 1.0), Q.lo(a) + r, Q.hi(a) - r);
        }
        bool free = true;
        for (int g = f; g < M && free; ++g)
          grids[g].visit(c, r + ladder[g], [&](std::uint32_t j) {
            if (free && overlaps(P.balls[j], c, r)) free = false;
          });
        if (!free) continue;
        grids[f].insert(c, static_cast<std::uint32_t>(P.balls.size()));
        P.balls.push_back(Ball{c, r, f});
        ++P.counts[f];
      }
      achieved[f] = P.counts[f] * ball_volume(d) * std::pow(r, d) / Q.volume();
      if (P.counts[f] != target[f]) ok = false;
    }
    if (!ok) continue;
    P.certificate = verify_packing(Q, ladder, P.balls);
    if (P.certificate.passed()) return P;
  }
  std::string msg = "swiss cheese: density window not reached within the seed budget; achieved";
  for (double c : achieved) msg += " " + std::to_string(c);
  throw ConstructionError(msg);
}

// ---------------------------------------------------------------------------

double decomposition_constant(int d) {
  const double b = ball_volume(d);
  const double rd = std::sqrt(static_cast<double>(d));
  return std::max({1.0 + 4.0 * rd * b, 8.0 * rd * b, cheese_constant(d)});
}

DecompositionParams fg_parameters(long N1, long N2, int d) {
  if (N1 < 1 || N2 < 1) throw ParameterError("fg_parameters: N1 and N2 must be positive");
  if (d < 2 || d > kMaxDim) throw ParameterError("fg_parameters: dimension must lie in [2, 8]");
  DecompositionParams p;
  p.d = d;
  p.C = decomposition_constant(d);
  const double n = static_cast<double>(std::min(N1, N2));
  const double R1 = std::pow(n, 1.0 / (3.0 * d * (d + 1)));
  p.l = std::pow(n, 1.0 / (2.0 * d * (d + 1)));
  p.M_formula = static_cast<int>(std::floor(std::log(n) / (18.0 * d * (d + 1) * std::log(p.C)))) - 1;
  p.M = p.M_formula;
  if (p.M < 1) {
    p.M = 1;
    p.clamped = true;
    p.warnings.push_back("M clamped to 1 (formula gave " + std::to_string(p.M_formula) + ")");
  }
  for (int k = 0; k < p.M; ++k) p.ladder.push_back(R1 * std::pow(p.C, k));
  p.feasible = p.M < std::log(p.l / R1) / (3.0 * std::log(p.C));
  if (!p.feasible) p.warnings.push_back("infeasible: M < log(l/R1) / (3 log C) fails at this N");
  return p;
}

double bump_density(double t, double kappa) {
  static const double z = [] {
    return quad::gk([](double u) { return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; }, -1.0, 1.0, 1e-14);
  }();
  const double u = (t - 1.0) / kappa;
  if (!(std::abs(u) < 1.0)) return 0.0;
  return std::exp(-1.0 / (1.0 - u * u)) / (kappa * z);
}

double FgSplitResult::z_score() const {
  if (standard_error > 0.0) return (localized - localized_exact) / standard_error;
  return localized == localized_exact ? 0.0 : std::copysign(INFINITY, localized - localized_exact);
}

bool FgSplitResult::within(double k_se) const { return std::abs(localized - localized_exact) <= k_se * standard_error; }

FgSplitResult fg_energy_split(const RieszKernel& k, const PointConfiguration& config, const BallPacking& packing,
                              const FgSplitOptions& opts) {
  const int d = k.d;
  if (config.dim() != d || packing.cube.dim() != d) throw ParameterError("fg_energy_split: dimension mismatch");
  if (opts.samples < 2) throw ParameterError("fg_energy_split: need at least two samples");
  if (!(opts.kappa > 0.0 && opts.kappa <= 0.5)) throw ParameterError("fg_energy_split: kappa must lie in (0, 1/2]");
  const double C = opts.C > 0.0 ? opts.C : decomposition_constant(d);
  const int M = static_cast<int>(packing.ladder.size());
  const double l = packing.cube.side;
  const std::size_t n = config.size();

  FgSplitResult res;
  res.weight = M / (M + C);
  res.samples = opts.samples;
  std::vector<double> cpair(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      cpair[i * n + j] = cpair[j * n + i] = k(config.point(i), config.point(j));
      res.full += 2.0 * cpair[i * n + j];
    }

  std::vector<FamilyGrid> grids;
  for (double r : packing.ladder) grids.emplace_back(packing.cube, r);
  for (std::size_t b = 0; b < packing.balls.size(); ++b)
    grids[packing.balls[b].family].insert(packing.balls[b].center, static_cast<std::uint32_t>(b));
  auto locate = [&](const Vec& z) -> long {
    long hit = -1;
    for (const auto& g : grids)
      g.visit(z, g.radius(), [&](std::uint32_t b) {
        const Ball& B = packing.balls[b];
        if ((B.center - z).squaredNorm() < B.radius * B.radius) hit = b;
      });
    return hit;
  };

  // fixed-size blocks with their own streams keep results independent of the thread count
  const long block = 256;
  const long blocks = (opts.samples + block - 1) / block;
  std::vector<double> sums(blocks, 0.0), squares(blocks, 0.0);
  const double peak = std::exp(-1.0);
  const Vec lower = packing.cube.lower();
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t bi) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(bi)};
    std::mt19937_64 rng(seq);
    const long count = std::min(block, opts.samples - static_cast<long>(bi) * block);
    for (long s = 0; s < count; ++s) {
      double t;
      while (true) {
        t = 1.0 - opts.kappa + 2.0 * opts.kappa * unit(rng);
        const double u = (t - 1.0) / opts.kappa;
        if (unit(rng) * peak < std::exp(-1.0 / (1.0 - u * u))) break;
      }
      Vec y(d);
      for (int a = 0; a < d; ++a) y[a] = l * t * (unit(rng) - 0.5);
      // group points by (ball, periodic shift)
      std::map<std::vector<long>, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < n; ++i) {
        Vec z = (config.point(i) - y) / t;
        std::vector<long> key(d + 1);
        for (int a = 0; a < d; ++a) {
          const long shift = static_cast<long>(std::floor((z[a] - lower[a]) / l));
          z[a] -= shift * l;
          key[a + 1] = shift;
        }
        const long b = locate(z);
        if (b < 0) continue;
        key[0] = b;
        groups[key].push_back(i);
      }
      double v = 0.0;
      for (const auto& [key, members] : groups) {
        (void)key;
        for (std::size_t a = 0; a < members.size(); ++a)
          for (std::size_t b = a + 1; b < members.size(); ++b) v += 2.0 * cpair[members[a] * n + members[b]];
      }
      sums[bi] += v;
      squares[bi] += v * v;
    }
  });
  double sum = 0.0, sq = 0.0;
  for (long b = 0; b < blocks; ++b) {
    sum += sums[b];
    sq += squares[b];
  }
  const double ns = static_cast<double>(opts.samples);
  const double mean = sum / ns;
  const double var = std::max(0.0, (sq - ns * mean * mean) / (ns - 1.0));
  res.localized = res.weight * mean;
  res.standard_error = res.weight * std::sqrt(var / ns);

  // E_t[Σ_b h_{2 t r_b}(|x_i - x_j|) / (l t)^d] against the normalized bump
  double exact = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = (config.point(i) - config.point(j)).norm();
      std::vector<double> cuts{1.0 - opts.kappa, 1.0 + opts.kappa};
      for (double r : packing.ladder) {
        const double tc = dist / (2.0 * r);
        if (tc > cuts[0] && tc < cuts[1]) cuts.push_back(tc);
      }
      std::sort(cuts.begin(), cuts.end());
      double p = 0.0;
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
        p += quad::tanh_sinh(
            [&](double t) {
              double h = 0.0;
              for (int f = 0; f < M; ++f)
                h += static_cast<double>(packing.counts[f]) * hs_hat(d, 2.0 * t * packing.ladder[f], dist);
              return bump_density(t, opts.kappa) * h / std::pow(l * t, d);
            },
            cuts[c], cuts[c + 1], 1e-12);
      exact += 2.0 * cpair[i * n + j] * p;
    }
  res.localized_exact = res.weight * exact;
  res.residual = res.full - res.localized;
  if (opts.max_relative_se > 0.0 && res.standard_error > opts.max_relative_se * std::abs(res.localized))
    throw AccuracyError("fg_energy_split: Monte-Carlo standard error above threshold; request more samples",
                        res.standard_error);
  return res;
}

// ---------------------------------------------------------------------------

AlmostSubadditiveReport almost_subadditive_check(const RieszKernel& k, long N1, long N2, const MinimizeOptions& opts) {
  if (N1 < 0 || N2 < 0 || N1 + N2 < 1) throw ParameterError("almost_subadditive_check: need N1, N2 >= 0 and N1 + N2 >= 1");
  const int d = k.d;
  AlmostSubadditiveReport r;
  r.N1 = N1;
  r.N2 = N2;
  auto xi = [&](long N, bool& conv) {
    if (N == 0) return 0.0;
    const CubeDomain K = CubeDomain::centered(d, std::pow(static_cast<double>(N), 1.0 / d));
    const auto m = minimize_jellium(k, K, static_cast<int>(N), opts);
    conv = conv && m.converged;
    return m.energy.total;
  };
  r.converged = true;
  r.xi_total = xi(N1 + N2, r.converged);
  r.xi_1 = xi(N1, r.converged);
  r.xi_2 = xi(N2, r.converged);
  r.excess = r.xi_total - r.xi_1 - r.xi_2;
  const long mn = std::min(N1, N2);
  if (mn >= 2) {
    const double lg = std::log(static_cast<double>(mn));
    r.c_add = std::max(0.0, r.excess * lg / static_cast<double>(N1 + N2));
    r.budget = r.c_add * static_cast<double>(N1 + N2) / lg;
  }
  return r;
}

}  // namespace rieszlab

#include "rieszlab/transport.hpp"

#include "rieszlab/lp.hpp"
#include "rieszlab/potentials.hpp"
#include "rieszlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace rieszlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxTuples = 1e7;

// Advances a sorted k-subset of {0..m-1}; false after the last one.
bool next_combination(std::vector<int>& c, int m) {
  const int k = static_cast<int>(c.size());
  int i = k - 1;
  while (i >= 0 && c[i] == m - k + i) --i;
  if (i < 0) return false;
  ++c[i];
  for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  return true;
}

double binomial(int m, int k) {
  if (k < 0 || k > m) return 0.0;
  return std::round(std::exp(std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0)));
}

std::vector<double> pair_costs(const RieszKernel& k, const GridMarginal& g) {
  const std::size_t m = g.size();
  std::vector<double> c(m * m, kInf);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      const double r = (g.sites.point(a) - g.sites.point(b)).norm();
      if (r > 0.0) c[a * m + b] = c[b * m + a] = k.radial(r);
    }
  return c;
}

double tuple_cost(const std::vector<int>& t, const std::vector<double>& pc, std::size_t m) {
  double e = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) e += 2.0 * pc[t[i] * m + t[j]];
  return e;
}

void check_kernel(const RieszKernel& k, const GridMarginal& g) {
  if (g.dim() != k.d) throw ParameterError("marginal dimension does not match the kernel");
  g.validate();
}

}  // namespace

// ---------------------------------------------------------------------------

void GridMarginal::validate() const {
  if (sites.size() != weights.size()) throw ParameterError("grid marginal: site and weight counts differ");
  if (weights.empty()) throw ParameterError("grid marginal: no sites");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("grid marginal: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("grid marginal: weights must sum to 1");
}

GridMarginal GridMarginal::uniform_interval(double a, double b, int m) {
  if (!(b > a) || m < 1) throw ParameterError("uniform grid needs b > a and m >= 1");
  GridMarginal g;
  g.sites = PointConfiguration(1);
  const double h = (b - a) / m;
  for (int i = 0; i < m; ++i) {
    g.sites.push_back(Vec::Constant(1, a + (i + 0.5) * h));
    g.weights.push_back(1.0 / m);
  }
  return g;
}

GridMarginal GridMarginal::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw ParameterError("marginal CSV: non-numeric entry on line " + std::to_string(lineno));
    }
    if (row.size() < 2) throw ParameterError("marginal CSV: line " + std::to_string(lineno) + " needs coordinates and a weight");
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParameterError("marginal CSV: inconsistent column count on line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParameterError("marginal CSV: no data rows");
  const int d = static_cast<int>(rows.front().size()) - 1;
  GridMarginal g;
  g.sites = PointConfiguration(d);
  for (const auto& r : rows) {
    Vec p(d);
    for (int a = 0; a < d; ++a) p[a] = r[a];
    g.sites.push_back(p);
    g.weights.push_back(r[d]);
  }
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------

PiecewiseConstantDensity PiecewiseConstantDensity::uniform(double a, double b) { return make({a, b}, {1.0}); }

PiecewiseConstantDensity PiecewiseConstantDensity::make(std::vector<double> breaks, std::vector<double> values) {
  if (breaks.size() != values.size() + 1 || values.empty())
    throw ParameterError("piecewise density: need n + 1 breaks for n values");
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (!(breaks[i + 1] > breaks[i])) throw ParameterError("piecewise density: breaks must increase");
  double mass = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) throw ParameterError("piecewise density: values must be nonnegative");
    mass += values[i] * (breaks[i + 1] - breaks[i]);
  }
  if (!(mass > 0.0)) throw ParameterError("piecewise density: zero mass");
  for (double& v : values) v /= mass;
  return PiecewiseConstantDensity{std::move(breaks), std::move(values)};
}

double PiecewiseConstantDensity::mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * (breaks[i + 1] - breaks[i]);
  return m;
}

double PiecewiseConstantDensity::max_density() const { return *std::max_element(values.begin(), values.end()); }

double PiecewiseConstantDensity::cdf(double x) const {
  double F = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (x <= breaks[i]) break;
    F += values[i] * (std::min(x, breaks[i + 1]) - breaks[i]);
  }
  return std::min(F, 1.0);
}

double PiecewiseConstantDensity::quantile(double u) const {
  double F = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double piece = values[i] * (breaks[i + 1] - breaks[i]);
    if (piece > 0.0 && u <= F + piece) return breaks[i] + (u - F) / values[i];
    F += piece;
  }
  return breaks.back();
}

double PiecewiseConstantDensity::self_energy(const RieszKernel& k) const {
  if (k.d != 1) throw ParameterError("piecewise density is one-dimensional");
  std::vector<double> terms;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (values[i] == 0.0 || values[j] == 0.0) continue;
      const CubeDomain Ki(Vec::Constant(1, 0.5 * (breaks[i] + breaks[i + 1])), breaks[i + 1] - breaks[i]);
      const CubeDomain Kj(Vec::Constant(1, 0.5 * (breaks[j] + breaks[j + 1])), breaks[j + 1] - breaks[j]);
      terms.push_back(values[i] * values[j] * cube_cube_integral(k, Ki, Kj));
    }
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

GridMarginal PiecewiseConstantDensity::discretize(int m) const {
  if (m < 1) throw ParameterError("discretize needs m >= 1");
  const double a = breaks.front(), b = breaks.back();
  const double h = (b - a) / m;
  GridMarginal g;
  g.sites = PointConfiguration(1);
  double prev = 0.0;
  for (int i = 0; i < m; ++i) {
    const double next = i + 1 == m ? 1.0 : cdf(a + (i + 1) * h);
    g.sites.push_back(Vec::Constant(1, a + (i + 0.5) * h));
    g.weights.push_back(next - prev);
    prev = next;
  }
  return g;
}

// ---------------------------------------------------------------------------

std::vector<double> DiscretePlan::marginal(std::size_t m) const {
  std::vector<double> mu(m, 0.0);
  for (std::size_t t = 0; t < tuples.size(); ++t)
    for (int a : tuples[t]) mu[a] += weights[t] / N;
  return mu;
}

double DiscretePlan::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

MmotResult mmot_bruteforce(const RieszKernel& k, const GridMarginal& marginal, int N) {
  check_kernel(k, marginal);
  if (N < 1) throw ParameterError("mmot: N must be at least 1");
  const int m = static_cast<int>(marginal.size());
  if (std::pow(static_cast<double>(m), N) > kMaxTuples)
    throw SizeError("mmot: m^N = " + std::to_string(std::pow(static_cast<double>(m), N)) + " exceeds the 1e7 enumeration guard");
  for (int a = 0; a < m; ++a)
    if (N * marginal.weights[a] > 1.0 + 1e-12)
      throw ConstraintError("mmot: infeasible marginal, N * mu_a > 1 at site " + std::to_string(a));
  MmotResult out;
  out.plan.N = N;
  if (N == 1) {
    for (int a = 0; a < m; ++a)
      if (marginal.weights[a] > 0.0) {
        out.plan.tuples.push_back({a});
        out.plan.weights.push_back(marginal.weights[a]);
      }
    out.columns = m;
    return out;
  }
  if (N > m) throw ConstraintError("mmot: fewer sites than particles");
  const auto pc = pair_costs(k, marginal);
  lp::Problem p;
  p.rows = m;
  for (int a = 0; a < m; ++a) p.b.push_back(N * marginal.weights[a]);
  std::vector<std::vector<int>> cols;
  std::vector<int> t(N);
  for (int i = 0; i < N; ++i) t[i] = i;
  const std::vector<double> ones(N, 1.0);
  do {
    const double c = tuple_cost(t, pc, m);
    if (!std::isfinite(c)) continue;
    p.add_column(c, t, ones);
    cols.push_back(t);
  } while (next_combination(t, m));
  const lp::Solution sol = lp::solve(p);
  if (sol.status == lp::Status::Infeasible) throw ConstraintError("mmot: marginal constraints are infeasible");
  if (sol.status != lp::Status::Optimal) throw AccuracyError("mmot: simplex did not reach optimality", sol.certificate());
  if (sol.certificate() > 1e-9) throw AccuracyError("mmot: complementary-slackness residual above 1e-9", sol.certificate());
  for (std::size_t j = 0; j < cols.size(); ++j)
    if (sol.x[j] > 0.0) {
      out.plan.tuples.push_back(cols[j]);
      out.plan.weights.push_back(sol.x[j]);
    }
  out.cost = sol.objective;
  out.certificate = sol.certificate();
  out.columns = cols.size();
  out.iterations = sol.iterations;
  return out;
}

double monotone_1d(const RieszKernel& k, const PiecewiseConstantDensity& rho, int N) {
  if (k.d != 1) throw ParameterError("monotone_1d is one-dimensional");
  if (k.s >= 1.0) throw DomainError("monotone_1d: mean-field energy is not integrable for s >= 1 in d = 1");
  if (N < 1) throw ParameterError("monotone_1d: N must be at least 1");
  if (N == 1) return 0.0;
  const double h = 1.0 / N;
  // u in [0, 1/N); breakpoints where some u + i/N crosses a cdf break
  std::vector<double> cuts{0.0, h};
  for (double b : rho.breaks) {
    const double F = rho.cdf(b);
    for (int i = 0; i < N; ++i) {
      const double u = F - i * h;
      if (u > 0.0 && u < h) cuts.push_back(u);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto integrand = [&](double u) {
    std::vector<double> x(N);
    for (int i = 0; i < N; ++i) x[i] = rho.quantile(u + i * h);
    double e = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) e += 2.0 * std::pow(x[j] - x[i], -k.s);
    return e;
  };
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    if (cuts[c + 1] - cuts[c] <= 0.0) continue;
    double err = 0.0;
    total += quad::gk(integrand, cuts[c], cuts[c + 1], 1e-13, &err);
  }
  return N * total;
}

double exc(const RieszKernel& k, const PiecewiseConstantDensity& rho, int N, double cost) {
  if (N < 1) throw ParameterError("exc: N must be at least 1");
  return (N == 1 ? 0.0 : cost) - static_cast<double>(N) * N * rho.self_energy(k);
}

double exc(const RieszKernel& k, const CubeDomain& K, int N, double cost) {
  if (N < 1) throw ParameterError("exc: N must be at least 1");
  const double v = K.volume();
  return (N == 1 ? 0.0 : cost) - static_cast<double>(N) * N * cube_cube_integral(k, K, K) / (v * v);
}

double exc(const RieszKernel&, const GridMarginal&, int, double) {
  throw DomainError("exc: the mean-field integral of an atomic marginal is infinite");
}

// ---------------------------------------------------------------------------

GrandCanonicalResult gc_ot(const RieszKernel& k, const GridMarginal& marginal, double N, int n_max) {
  check_kernel(k, marginal);
  if (!(N >= 0.0) || !std::isfinite(N)) throw ParameterError("gc_ot: N must be a nonnegative number");
  if (n_max < static_cast<int>(std::ceil(N)) + 2) throw ParameterError("gc_ot: n_max must be at least ceil(N) + 2");
  const int m = static_cast<int>(marginal.size());
  const int top = std::min(n_max, m);
  double total_cols = 0.0;
  for (int n = 0; n <= top; ++n) total_cols += binomial(m, n);
  if (total_cols > kMaxTuples) throw SizeError("gc_ot: subset count exceeds the 1e7 enumeration guard");
  const auto pc = pair_costs(k, marginal);
  lp::Problem p;
  p.rows = m + 1;
  for (int a = 0; a < m; ++a) p.b.push_back(N * marginal.weights[a]);
  p.b.push_back(1.0);
  std::vector<std::vector<int>> cols;
  for (int n = 0; n <= top; ++n) {
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) t[i] = i;
    do {
      const double c = tuple_cost(t, pc, m);
      if (!std::isfinite(c)) continue;
      std::vector<int> rows = t;
      rows.push_back(m);
      p.add_column(c, rows, std::vector<double>(rows.size(), 1.0));
      cols.push_back(t);
    } while (n > 0 && next_combination(t, m));
  }
  const lp::Solution sol = lp::solve(p);
  if (sol.status == lp::Status::Infeasible) throw ConstraintError("gc_ot: mass constraints are infeasible");
  if (sol.status != lp::Status::Optimal) throw AccuracyError("gc_ot: simplex did not reach optimality", sol.certificate());
  if (sol.certificate() > 1e-9) throw AccuracyError("gc_ot: complementary-slackness residual above 1e-9", sol.certificate());

  GrandCanonicalResult out;
  auto& st = out.state;
  st.lambdas.assign(n_max + 1, 0.0);
  st.marginals.resize(n_max + 1);
  st.plans.resize(n_max + 1);
  std::vector<std::vector<double>> load(n_max + 1, std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (sol.x[j] <= 0.0) continue;
    const int n = static_cast<int>(cols[j].size());
    st.lambdas[n] += sol.x[j];
    st.plans[n].N = n;
    st.plans[n].tuples.push_back(cols[j]);
    st.plans[n].weights.push_back(sol.x[j]);
    for (int a : cols[j]) load[n][a] += sol.x[j];
  }
  double lam_total = 0.0;
  std::vector<double> recon(m, 0.0);
  for (int n = 0; n <= n_max; ++n) {
    lam_total += st.lambdas[n];
    st.marginals[n].sites = marginal.sites;
    if (st.lambdas[n] <= 0.0) continue;
    for (double& w : st.plans[n].weights) w /= st.lambdas[n];
    if (n == 0) continue;
    st.marginals[n].weights.resize(m);
    for (int a = 0; a < m; ++a) {
      st.marginals[n].weights[a] = load[n][a] / (n * st.lambdas[n]);
      recon[a] += load[n][a];
    }
  }
  double res = std::abs(lam_total - 1.0);
  for (int a = 0; a < m; ++a) res = std::max(res, std::abs(recon[a] - N * marginal.weights[a]));
  st.constraint_residual = res;
  out.cost = sol.objective;
  out.certificate = sol.certificate();
  return out;
}

SubadditivityVerdict subadditivity_check(const RieszKernel& k, const std::vector<SubadditivityComponent>& components) {
  if (components.empty()) throw ParameterError("subadditivity: no components");
  int M = 0;
  for (const auto& c : components) {
    if (c.M < 1) throw ParameterError("subadditivity: every M_i must be at least 1");
    check_kernel(k, c.marginal);
    M += c.M;
  }
  // atomic components must not share sites, otherwise the cross terms are infinite
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < components.size(); ++i) {
    std::set<std::vector<double>> mine;
    const auto& g = components[i].marginal;
    for (std::size_t a = 0; a < g.size(); ++a) {
      if (g.weights[a] == 0.0) continue;
      std::vector<double> key(g.sites.coords().begin() + a * g.dim(), g.sites.coords().begin() + (a + 1) * g.dim());
      if (seen.count(key)) throw ConstraintError("subadditivity: component supports must be disjoint");
      mine.insert(key);
    }
    seen.insert(mine.begin(), mine.end());
  }
  GridMarginal mix;
  mix.sites = PointConfiguration(k.d);
  for (const auto& c : components)
    for (std::size_t a = 0; a < c.marginal.size(); ++a) {
      mix.sites.push_back(c.marginal.sites.point(a));
      mix.weights.push_back(c.M * c.marginal.weights[a] / M);
    }
  double cross = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i)
    for (std::size_t j = 0; j < components.size(); ++j) {
      if (i == j) continue;
      const auto& gi = components[i].marginal;
      const auto& gj = components[j].marginal;
      double pair = 0.0;
      for (std::size_t a = 0; a < gi.size(); ++a)
        for (std::size_t b = 0; b < gj.size(); ++b) {
          if (gi.weights[a] == 0.0 || gj.weights[b] == 0.0) continue;
          pair += gi.weights[a] * gj.weights[b] * k(gi.sites.point(a), gj.sites.point(b));
        }
      cross += static_cast<double>(components[i].M) * components[j].M * pair;
    }
  SubadditivityVerdict v;
  if (components.size() == 1) {
    const double f = mmot_bruteforce(k, components[0].marginal, components[0].M).cost;
    v.lhs = v.rhs = f;
  } else {
    v.lhs = mmot_bruteforce(k, mix, M).cost - cross;
    for (const auto& c : components) v.rhs += mmot_bruteforce(k, c.marginal, c.M).cost;
  }
  v.violation = std::max(0.0, v.lhs - v.rhs);
  v.holds = v.violation <= 1e-9;
  return v;
}

namespace {

SeparationBound separation_from_modulus(const RieszKernel& k, double rho_max, int N, double diameter) {
  if (N < 2) throw ParameterError("plan separation bound needs N >= 2");
  const double t = 1.0 / (static_cast<double>(N) * N * (N - 1));
  const double omega = std::pow(t / (rho_max * ball_volume(k.d)), 1.0 / k.d);
  SeparationBound b;
  b.radius = std::pow(0.5 * N * N * (N - 1) * omega, -1.0 / k.s);
  b.diameter = diameter;
  b.vacuous = b.radius >= diameter;
  return b;
}

}  // namespace

SeparationBound plan_separation_bound(const RieszKernel& k, const PiecewiseConstantDensity& rho, int N) {
  if (k.d != 1) throw ParameterError("piecewise density is one-dimensional");
  return separation_from_modulus(k, rho.max_density(), N, rho.breaks.back() - rho.breaks.front());
}

SeparationBound plan_separation_bound(const RieszKernel& k, const CubeDomain& K, int N) {
  if (K.dim() != k.d) throw ParameterError("cube dimension does not match the kernel");
  return separation_from_modulus(k, 1.0 / K.volume(), N, K.side * std::sqrt(static_cast<double>(k.d)));
}

double plan_min_separation(const DiscretePlan& plan, const GridMarginal& marginal) {
  double best = kInf;
  for (const auto& t : plan.tuples)
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = i + 1; j < t.size(); ++j)
        best = std::min(best, (marginal.sites.point(t[i]) - marginal.sites.point(t[j])).norm());
  return best;
}

}  // namespace rieszlab

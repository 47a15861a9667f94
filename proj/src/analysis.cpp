#include "rieszlab/analysis.hpp"

#include "rieszlab/parallel.hpp"
#include "rieszlab/potentials.hpp"
#include "rieszlab/transport.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace rieszlab {

std::string FitModel::describe() const {
  std::ostringstream os;
  os << "C + a N^-" << exponent;
  if (terms >= 3) os << " + b N^-" << 2.0 * exponent;
  return os.str();
}

namespace {

struct Fit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd gram_inv;
};

Eigen::RowVectorXd design_row(double N, const FitModel& m) {
  Eigen::RowVectorXd r(m.terms);
  const double u = std::pow(N, -m.exponent);
  r[0] = 1.0;
  if (m.terms > 1) r[1] = u;
  if (m.terms > 2) r[2] = u * u;
  return r;
}

Fit least_squares(const std::vector<std::pair<double, double>>& pts, const FitModel& m) {
  const int n = static_cast<int>(pts.size());
  Eigen::MatrixXd X(n, m.terms);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X.row(i) = design_row(pts[i].first, m);
    y[i] = pts[i].second;
  }
  // Column scaling keeps the rank test meaningful when N^{-2p} is tiny.
  Eigen::VectorXd scale = X.colwise().norm().transpose();
  for (int j = 0; j < m.terms; ++j) {
    if (scale[j] == 0.0) throw FitError("extrapolate_constant: zero design column");
    X.col(j) /= scale[j];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < m.terms) throw FitError("extrapolate_constant: degenerate design matrix");
  Fit f;
  f.coef = qr.solve(y).cwiseQuotient(scale);
  const Eigen::MatrixXd G = (X.transpose() * X).inverse();
  f.gram_inv = G;
  for (int i = 0; i < m.terms; ++i)
    for (int j = 0; j < m.terms; ++j) f.gram_inv(i, j) /= scale[i] * scale[j];
  return f;
}

}  // namespace

ConstantEstimate extrapolate_constant(const std::vector<std::pair<double, double>>& series, const FitModel& model) {
  if (model.terms < 2 || model.terms > 3) throw ParameterError("extrapolate_constant: terms must be 2 or 3");
  if (!(model.exponent > 0.0)) throw ParameterError("extrapolate_constant: exponent must be positive");
  if (series.size() < 4) throw FitError("extrapolate_constant: at least 4 points are required");
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!(series[i].first > 0.0) || !std::isfinite(series[i].second))
      throw FitError("extrapolate_constant: invalid series entry");
    if (i > 0 && !(series[i].first > series[i - 1].first))
      throw FitError("extrapolate_constant: N must be strictly increasing");
  }
  const std::size_t n = series.size();
  const int p = model.terms;

  ConstantEstimate est;
  est.model = model.describe();
  est.series = series;
  const Fit full = least_squares(series, model);
  est.value = full.coef[0];
  est.coefficients.assign(full.coef.data(), full.coef.data() + p);
  double rss = 0.0;
  for (const auto& [N, v] : series) {
    const double r = v - design_row(N, model).dot(full.coef);
    est.residuals.push_back(r);
    rss += r * r;
  }
  if (static_cast<int>(n) > p)
    est.fit_standard_error = std::sqrt(rss / static_cast<double>(static_cast<int>(n) - p) * full.gram_inv(0, 0));

  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, double>> sub;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sub.push_back(series[j]);
    const Fit f = least_squares(sub, model);
    loo[i] = f.coef[0];
    if (i + 1 == n) est.holdout_residual = std::abs(series[i].second - design_row(series[i].first, model).dot(f.coef));
  }
  double mean = 0.0;
  for (double c : loo) mean += c;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double c : loo) var += (c - mean) * (c - mean);
  est.jackknife_error = std::sqrt(var * static_cast<double>(n - 1) / static_cast<double>(n));
  est.error = std::max({est.jackknife_error, est.holdout_residual, est.fit_standard_error});
  return est;
}

// ---------------------------------------------------------------------------

namespace {

GridMarginal uniform_cube_grid(int d, int m) {
  GridMarginal g;
  g.sites = PointConfiguration(d);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(m);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec p(d);
    std::size_t rest = idx;
    for (int k = 0; k < d; ++k) {
      p[k] = (static_cast<double>(rest % m) + 0.5) / m;
      rest /= m;
    }
    g.sites.push_back(p);
  }
  g.weights.assign(total, 1.0 / static_cast<double>(total));
  return g;
}

int default_grid_m(int d) { return d == 2 ? 4 : 2; }

double ot_cost(const RieszKernel& k, int N, int grid_m) {
  if (k.d == 1) return monotone_1d(k, PiecewiseConstantDensity::uniform(0.0, 1.0), N);
  return mmot_bruteforce(k, uniform_cube_grid(k.d, grid_m > 0 ? grid_m : default_grid_m(k.d)), N).cost;
}

CubeDomain unit_density_cube(int d, int N) { return CubeDomain::centered(d, std::pow(static_cast<double>(N), 1.0 / d)); }

}  // namespace

ScanResult scan_s(ScanProblem problem, int d, int N, const std::vector<double>& s_grid, const ScanOptions& opts) {
  if (d < 1 || d > 3) throw UnsupportedError("scan_s: d must be 1, 2 or 3");
  if (N < 1) throw ParameterError("scan_s: N must be positive");
  if (s_grid.empty()) throw ParameterError("scan_s: empty s grid");
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    const double s = s_grid[i];
    const double lo = problem == ScanProblem::Jellium ? std::max(0.0, d - 2.0) : 0.0;
    const bool ok = (problem == ScanProblem::Jellium && d >= 3) ? (s >= lo && s < d) : (s > lo && s < d);
    if (!ok) throw ParameterError("scan_s: s outside the admissible range");
    if (i > 0 && !(s > s_grid[i - 1])) throw ParameterError("scan_s: s grid must be increasing");
  }
  if (problem == ScanProblem::Ot && d == 1 && s_grid.back() >= 1.0)
    throw ParameterError("scan_s: the monotone solver needs s < 1");

  ScanResult res;
  res.problem = problem;
  res.d = d;
  res.N = N;
  res.s = s_grid;
  res.values.resize(s_grid.size());
  if (problem == ScanProblem::Jellium) {
    const CubeDomain K = unit_density_cube(d, N);
    PointConfiguration prev(d);
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
      const RieszKernel k(s_grid[i], d);
      const MinimizationResult r =
          i == 0 ? minimize_jellium(k, K, N, opts.minimize) : refine_jellium(k, K, prev, opts.minimize);
      if (!r.converged) res.warnings.push_back("minimizer did not converge at s = " + std::to_string(s_grid[i]));
      res.values[i] = r.energy.total;
      prev = r.configuration;
    }
  } else {
    parallel_for(s_grid.size(), [&](std::size_t i) {
      res.values[i] = ot_cost(RieszKernel(s_grid[i], d), N, opts.grid_m);
    });
  }
  for (std::size_t i = 0; i + 1 < res.values.size(); ++i) res.jumps.push_back(std::abs(res.values[i + 1] - res.values[i]));
  res.diagnostic_defined = !res.jumps.empty();
  if (!res.diagnostic_defined) {
    res.max_jump = std::numeric_limits<double>::quiet_NaN();
    res.warnings.push_back("single grid point: continuity diagnostic undefined");
    return res;
  }
  const auto it = std::max_element(res.jumps.begin(), res.jumps.end());
  res.max_jump = *it;
  res.endpoint_growth = res.jumps.size() >= 2 && it + 1 == res.jumps.end() && res.jumps.back() > res.jumps.front();
  if (res.endpoint_growth) res.warnings.push_back("jumps grow towards the upper end of the s grid");
  return res;
}

double jump_refinement_ratio(const ScanResult& coarse, const ScanResult& fine) {
  if (!coarse.diagnostic_defined || !fine.diagnostic_defined || coarse.max_jump == 0.0)
    return std::numeric_limits<double>::quiet_NaN();
  return fine.max_jump / coarse.max_jump;
}

// ---------------------------------------------------------------------------

LimitReport comparison_limits(const RieszKernel& k, const PeriodicConfiguration& base, const std::vector<double>& R_sequence) {
  const int d = k.d;
  if (base.cell.dim() != d || base.base_points.dim() != d) throw ParameterError("comparison_limits: dimension mismatch");
  base.validate();
  const double R1 = base.cell.side;
  if (norm(base.centered_moment()) > 1e-9 * std::max(1.0, R1) * static_cast<double>(base.base_points.size()))
    throw ParameterError("comparison_limits: base cell must have zero barycenter");
  if (R_sequence.empty()) throw ParameterError("comparison_limits: empty R sequence");

  LimitReport rep;
  rep.asserted = k.s > d - 2.0;
  if (!rep.asserted) rep.warnings.push_back("s <= d - 2: values reported without a convergence claim");

  for (double R : R_sequence) {
    const CubeDomain KR = CubeDomain::from_lower(base.cell.lower(), R);
    const AveragedMarginal mu = averaged_plan_marginal(base, KR);
    const PointConfiguration nu = mu.window_points();
    LimitRow row;
    row.R = R;
    row.N = nu.size();
    const double n = static_cast<double>(row.N);
    row.d1 = jel_ueg_gap(k, UniformMeasure{KR, 1.0}, nu) / n;
    row.d2 = (cube_cube_integral(k, KR, KR) - averaged_self_energy(k, mu)) / n;
    rep.rows.push_back(row);
  }

  // One-cell charges centered at the origin.
  const Vec c = base.cell.center;
  const Vec zero = Vec::Zero(d);
  SignedChargeSystem tau1(d);
  for (std::size_t i = 0; i < base.base_points.size(); ++i) tau1.add_atom(base.base_points.point(i) - c, 1.0);
  tau1.add_box(CubeDomain(zero, R1), -1.0);

  const std::size_t nb = base.base_points.size();
  const double inv = 1.0 / (std::pow(R1, d) * std::pow(R1, d));
  std::map<std::vector<long long>, std::pair<Vec, double>> groups;
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      const Vec delta = base.base_points.point(a) - base.base_points.point(b);
      std::vector<long long> key(d);
      for (int j = 0; j < d; ++j) key[j] = std::llround(delta[j] * 1e9);
      auto& g = groups.try_emplace(key, delta, 0.0).first->second;
      g.second += inv;
    }
  SignedChargeSystem tau2(d);
  tau2.add_box(CubeDomain(zero, R1), 1.0);
  for (const auto& [key, g] : groups) tau2.add_box(CubeDomain(g.first, R1), -g.second);

  const double cell_volume = std::pow(R1, d);
  auto limits = [&](const SignedChargeSystem& sys, double factor, double& spatial, double& fourier, const char* label) {
    try {
      const NetPotentialResult npi = net_potential_integral(k, sys);
      spatial = factor * npi.value / cell_volume;
      for (const auto& w : npi.warnings) rep.warnings.push_back(std::string(label) + ": " + w);
    } catch (const Error& e) {
      spatial = std::numeric_limits<double>::quiet_NaN();
      rep.warnings.push_back(std::string(label) + " spatial: " + e.what());
    }
    try {
      const FourierLimit fl = fourier_zero_limit(k, sys);
      fourier = factor * fl.estimate / cell_volume;
      for (const auto& w : fl.warnings) rep.warnings.push_back(std::string(label) + " fourier: " + w);
    } catch (const Error& e) {
      fourier = std::numeric_limits<double>::quiet_NaN();
      rep.warnings.push_back(std::string(label) + " fourier: " + e.what());
    }
  };
  limits(tau1, 2.0, rep.rhs1_spatial, rep.rhs1_fourier, "first limit");
  // The box charge already carries the cell volume; dividing once more gives the per-point value.
  limits(tau2, 1.0, rep.rhs2_spatial, rep.rhs2_fourier, "second limit");

  rep.monotone1 = rep.monotone2 = rep.rows.size() >= 2;
  // Differences that vanish identically (e.g. a one-point cell) count as decreasing.
  auto decreasing = [](double prev, double cur) { return std::abs(cur) < std::abs(prev) || std::abs(cur) <= 1e-13; };
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (!decreasing(rep.rows[i - 1].d1, rep.rows[i].d1)) rep.monotone1 = false;
    if (!decreasing(rep.rows[i - 1].d2, rep.rows[i].d2)) rep.monotone2 = false;
  }
  rep.converged = rep.asserted && rep.monotone1 && rep.monotone2 && std::abs(rep.rhs1_spatial) < 1e-5 &&
                  std::abs(rep.rhs2_spatial) < 1e-5;
  return rep;
}

// ---------------------------------------------------------------------------

CompareBudgets CompareBudgets::defaults(int d) {
  CompareBudgets b;
  switch (d) {
    case 1:
      b.jellium_N = {4, 8, 16, 32, 64};
      b.ot_N = {4, 8, 16, 32, 64};
      break;
    case 2:
      b.jellium_N = {4, 9, 16, 25, 36};
      b.ot_N = {2, 3, 4, 5};
      b.grid_m = 4;
      break;
    default:
      b.jellium_N = {8, 27, 64, 125};
      b.ot_N = {2, 3, 4, 5};
      b.grid_m = 2;
      b.minimize.restarts = 2;
      break;
  }
  return b;
}

CompareReport compare_constants(const RieszKernel& k, const CompareBudgets& budgets) {
  const int d = k.d;
  CompareReport rep;
  rep.d = d;
  rep.s = k.s;
  const FitModel model = FitModel::surface(d);

  std::vector<std::pair<double, double>> jel(budgets.jellium_N.size());
  parallel_for(jel.size(), [&](std::size_t i) {
    const int N = budgets.jellium_N[i];
    const MinimizationResult r = minimize_jellium(k, unit_density_cube(d, N), N, budgets.minimize);
    jel[i] = {static_cast<double>(N), r.energy.total / N};
  });
  rep.jellium = extrapolate_constant(jel, model);

  std::vector<std::pair<double, double>> ot(budgets.ot_N.size());
  const CubeDomain unit = CubeDomain::from_lower(Vec::Zero(d), 1.0);
  parallel_for(ot.size(), [&](std::size_t i) {
    const int N = budgets.ot_N[i];
    const double cost = ot_cost(k, N, budgets.grid_m);
    const double xc = d == 1 ? exc(k, PiecewiseConstantDensity::uniform(0.0, 1.0), N, cost) : exc(k, unit, N, cost);
    ot[i] = {static_cast<double>(N), xc / std::pow(static_cast<double>(N), 1.0 + k.s / d)};
  });
  rep.ot = extrapolate_constant(ot, model);
  if (d >= 2) rep.warnings.push_back("OT channel uses a coarse grid and small N; treat it as indicative only");

  const std::string lname = !budgets.lattice.empty() ? budgets.lattice : d == 1 ? "Z1" : d == 2 ? "triangular" : "BCC";
  try {
    rep.lattice = periodic_energy_per_point(k, Lattice::by_name(lname, d));
    rep.lattice_per_point = 2.0 * rep.lattice.value;
  } catch (const Error& e) {
    rep.lattice.value = std::numeric_limits<double>::quiet_NaN();
    rep.lattice_per_point = rep.lattice.value;
    rep.warnings.push_back(std::string("lattice channel: ") + e.what());
  }

  for (const auto& [Nj, vj] : jel)
    for (const auto& [No, vo] : ot)
      if (Nj == No) rep.gaps.emplace_back(static_cast<int>(Nj), std::abs(vj - vo));

  rep.difference = rep.jellium.value - rep.ot.value;
  rep.combined_error = std::hypot(rep.jellium.error, rep.ot.error);
  rep.easy_inequality = rep.jellium.value <= rep.ot.value + rep.combined_error;
  if (d == 1)
    rep.d1_agreement = std::abs(rep.difference) <= 0.05 * std::max(std::abs(rep.jellium.value), std::abs(rep.ot.value));
  rep.all_negative = rep.jellium.value < 0.0 && rep.ot.value < 0.0 && !(rep.lattice.value >= 0.0);
  if (!rep.easy_inequality) rep.warnings.push_back("jellium estimate exceeds the OT estimate beyond the error bars");
  return rep;
}

}  // namespace rieszlab

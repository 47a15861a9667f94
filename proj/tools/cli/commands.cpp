#include "commands.hpp"

#include "rieszlab/analysis.hpp"
#include "rieszlab/decomposition.hpp"
#include "rieszlab/jellium.hpp"
#include "rieszlab/lattice.hpp"
#include "rieszlab/transport.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace rieszlab::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Csv::Csv(std::vector<std::string> header) {
  for (const auto& h : header) cell(h);
  end_row();
}

Csv& Csv::cell(const std::string& x) {
  if (!first_) out_ += ',';
  out_ += x;
  first_ = false;
  return *this;
}

Csv& Csv::cell(double x) { return cell(format_number(x)); }
Csv& Csv::cell(long x) { return cell(std::to_string(x)); }
Csv& Csv::cell(std::size_t x) { return cell(std::to_string(x)); }

void Csv::end_row() {
  out_ += '\n';
  first_ = true;
}

namespace {

json nan_safe(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

RieszKernel read_kernel(Obj& root) {
  Obj k = root.object("kernel");
  const double s = k.number("s");
  const long d = k.integer("d");
  k.finish();
  if (d < 1 || d > kMaxDim) throw SchemaError(k.at("d"), "dimension must be between 1 and " + std::to_string(kMaxDim));
  if (!(s > 0.0 && s < static_cast<double>(d))) throw SchemaError(k.at("s"), "need 0 < s < d");
  return RieszKernel(s, static_cast<int>(d));
}

std::uint64_t require_seed(const Context& ctx) {
  if (!ctx.seed) throw SchemaError("seed", "required for the stochastic command '" + ctx.command + "'");
  return *ctx.seed;
}

Vec to_vec(const std::vector<double>& x) {
  Vec v(static_cast<int>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<int>(i)] = x[i];
  return v;
}

PointConfiguration read_points(Obj& o, const std::string& key, int d) {
  PointConfiguration c(d);
  for (const auto& p : o.points(key, d)) c.push_back(to_vec(p));
  return c;
}

CubeDomain read_cube(Obj& o, int d) {
  const double side = o.number("side");
  if (!(side > 0.0)) throw SchemaError(o.at("side"), "must be positive");
  Vec center = Vec::Zero(d);
  if (o.has("center")) {
    const auto c = o.numbers("center");
    if (static_cast<int>(c.size()) != d) throw SchemaError(o.at("center"), "expected " + std::to_string(d) + " numbers");
    center = to_vec(c);
  }
  o.skip("center");
  return CubeDomain(center, side);
}

std::vector<int> positive_ints(Obj& o, const std::string& key) {
  std::vector<int> out;
  for (long n : o.integers(key)) {
    if (n < 1) throw SchemaError(o.at(key), "entries must be positive");
    out.push_back(static_cast<int>(n));
  }
  if (out.empty()) throw SchemaError(o.at(key), "must not be empty");
  return out;
}

json estimate_json(const ConstantEstimate& e) {
  json j;
  j["value"] = e.value;
  j["error"] = e.error;
  j["jackknife_error"] = e.jackknife_error;
  j["holdout_residual"] = e.holdout_residual;
  j["fit_standard_error"] = e.fit_standard_error;
  j["model"] = e.model;
  j["coefficients"] = e.coefficients;
  j["residuals"] = e.residuals;
  return j;
}

Lattice read_lattice(Obj& root, int d) {
  const json& v = root.raw("lattice");
  try {
    if (v.is_string()) return Lattice::by_name(v.get<std::string>(), d);
    if (v.is_object()) return Lattice::from_json(v.dump());
  } catch (const Error& e) {
    throw SchemaError(root.at("lattice"), e.what());
  }
  throw SchemaError(root.at("lattice"), "expected a lattice name or {\"name\", \"basis\"}");
}

// ---------------------------------------------------------------------------

Output cmd_energy(Obj& root, const Context&) {
  const RieszKernel k = read_kernel(root);
  Obj bg = root.object("background");
  const CubeDomain K = read_cube(bg, k.d);
  bg.finish();
  const PointConfiguration config = read_points(root, "points", k.d);
  root.finish();

  const EnergyBreakdown jel = e_jel(k, K, config);
  const EnergyBreakdown ueg = e_ueg(k, UniformMeasure{K, 1.0}, config);
  const double gap = jel_ueg_gap(k, UniformMeasure{K, 1.0}, config);
  Output out;
  Csv csv({"quantity", "value"});
  const std::vector<std::pair<std::string, double>> rows = {
      {"pair_sum", jel.pair_sum},   {"attraction", jel.attraction}, {"background_self", jel.background_self},
      {"e_jel", jel.total},         {"e_ueg", ueg.total},           {"gap", gap},
      {"gap_identity_residual", ueg.total - jel.total - gap}};
  for (const auto& [name, v] : rows) {
    csv.cell(name).cell(v).end_row();
    out.result[name] = v;
  }
  out.result["points"] = config.size();
  out.csv = csv.str();
  return out;
}

Output cmd_minimize(Obj& root, const Context& ctx) {
  const RieszKernel k = read_kernel(root);
  const std::vector<int> Ns = positive_ints(root, "N");
  MinimizeOptions opts;
  opts.seed = require_seed(ctx);
  opts.restarts = static_cast<int>(root.integer("restarts", 8));
  opts.max_iterations = static_cast<int>(root.integer("max_iterations", 3000));
  opts.anneal = root.boolean("anneal", true);
  if (ctx.tolerance) opts.gradient_tolerance = *ctx.tolerance;
  if (opts.restarts < 1) throw SchemaError("restarts", "must be at least 1");
  const bool check_sep = root.has("epsilon");
  const double eps = root.number("epsilon", 0.0);
  root.finish();

  Output out;
  Csv csv({"N", "side", "xi", "xi_per_N", "lower_bound", "min_separation", "gradient_norm", "converged"});
  std::vector<std::pair<double, double>> series;
  json runs = json::array();
  for (int N : Ns) {
    const CubeDomain K = CubeDomain::centered(k.d, std::pow(static_cast<double>(N), 1.0 / k.d));
    const MinimizationResult r = minimize_jellium(k, K, N, opts);
    const double lb = jellium_lower_bound(k, N);
    csv.cell(N).cell(K.side).cell(r.energy.total).cell(r.energy.total / N).cell(lb).cell(r.separation);
    csv.cell(r.gradient_norm).cell(r.converged ? "1" : "0").end_row();
    series.emplace_back(N, r.energy.total / N);
    json run = {{"N", N},
                {"xi", r.energy.total},
                {"converged", r.converged},
                {"within_bounds", lb <= r.energy.total && r.energy.total <= 0.0},
                {"configuration", r.configuration.coords()}};
    if (check_sep) {
      const SeparationCertificate c = check_separation(r, k, eps);
      run["separation"] = {{"applicable", c.applicable}, {"passed", c.passed}, {"threshold", c.threshold},
                           {"min_distance", nan_safe(c.min_distance)}, {"note", c.note}};
    }
    runs.push_back(std::move(run));
  }
  out.result["runs"] = std::move(runs);
  if (series.size() >= 4) {
    out.result["extrapolation"] = estimate_json(extrapolate_constant(series, FitModel::surface(k.d)));
  } else {
    out.result["extrapolation"] = nullptr;
    out.result["extrapolation_note"] = "at least 4 values of N are needed for the three-parameter fit";
  }
  out.csv = csv.str();
  return out;
}

Output cmd_lattice_const(Obj& root, const Context&) {
  const RieszKernel k = read_kernel(root);
  const Lattice L = read_lattice(root, k.d);
  std::vector<double> windows;
  if (root.has("windows")) windows = root.numbers("windows");
  root.skip("windows");
  root.finish();
  if (L.dim() != k.d) throw SchemaError("lattice", "dimension differs from kernel.d");

  const LatticeConstant c = periodic_energy_per_point(k, L, windows);
  Output out;
  Csv csv({"kind", "side", "points", "value"});
  csv.cell("constant").cell("").cell("").cell(c.value).end_row();
  for (const auto& w : c.windows) csv.cell("window").cell(w.side).cell(w.points).cell(w.energy_per_point).end_row();
  out.result = {{"lattice", L.name},      {"value", c.value},       {"error", c.error},
                {"method", c.method},     {"warnings", c.warnings}, {"per_point_ordered_pairs", 2.0 * c.value}};
  out.csv = csv.str();
  return out;
}

GridMarginal read_marginal(Obj& root, int d, const Context& ctx) {
  Obj m = root.object("marginal");
  GridMarginal g;
  try {
    if (m.has("csv")) {
      std::filesystem::path p = m.string("csv");
      if (p.is_relative()) p = std::filesystem::path(ctx.config_dir) / p;
      std::ifstream in(p);
      if (!in) throw SchemaError(m.at("csv"), "cannot read " + p.string());
      std::stringstream ss;
      ss << in.rdbuf();
      g = GridMarginal::from_csv(ss.str());
    } else if (m.has("interval")) {
      const auto iv = m.numbers("interval");
      if (iv.size() != 2) throw SchemaError(m.at("interval"), "expected [a, b]");
      g = GridMarginal::uniform_interval(iv[0], iv[1], static_cast<int>(m.integer("m")));
    } else {
      g.sites = read_points(m, "sites", d);
      g.weights = m.numbers("weights");
      if (g.weights.size() != g.sites.size()) throw SchemaError(m.at("weights"), "one weight per site is required");
    }
    g.validate();
  } catch (const ParameterError& e) {
    throw SchemaError(root.at("marginal"), e.what());
  }
  m.skip("csv");
  m.skip("interval");
  m.skip("m");
  m.skip("sites");
  m.skip("weights");
  m.finish();
  if (g.dim() != d) throw SchemaError(root.at("marginal"), "site dimension differs from kernel.d");
  return g;
}

Output cmd_mmot(Obj& root, const Context& ctx) {
  const RieszKernel k = read_kernel(root);
  const long N = root.integer("N");
  if (N < 1) throw SchemaError("N", "must be positive");
  const GridMarginal g = read_marginal(root, k.d, ctx);
  root.finish();

  const MmotResult r = mmot_bruteforce(k, g, static_cast<int>(N));
  std::vector<std::string> header{"weight"};
  for (long i = 0; i < N; ++i) header.push_back("site" + std::to_string(i + 1));
  Csv csv(header);
  for (std::size_t t = 0; t < r.plan.tuples.size(); ++t) {
    csv.cell(r.plan.weights[t]);
    for (int a : r.plan.tuples[t]) csv.cell(a);
    csv.end_row();
  }
  const std::vector<double> marg = r.plan.marginal(g.size());
  double resid = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) resid = std::max(resid, std::abs(marg[a] - g.weights[a]));
  Output out;
  out.result = {{"cost", r.cost},       {"certificate", r.certificate}, {"columns", r.columns},
                {"iterations", r.iterations}, {"support", r.plan.tuples.size()}, {"marginal_residual", resid},
                {"min_separation", nan_safe(plan_min_separation(r.plan, g))}};
  out.csv = csv.str();
  return out;
}

Output cmd_monotone1d(Obj& root, const Context&) {
  const RieszKernel k = read_kernel(root);
  if (k.d != 1) throw SchemaError("kernel.d", "monotone1d needs d = 1");
  PiecewiseConstantDensity rho = PiecewiseConstantDensity::uniform(0.0, 1.0);
  if (root.has("density")) {
    Obj dj = root.object("density");
    try {
      rho = PiecewiseConstantDensity::make(dj.numbers("breaks"), dj.numbers("values"));
    } catch (const ParameterError& e) {
      throw SchemaError(root.at("density"), e.what());
    }
    dj.finish();
  }
  root.skip("density");
  const std::vector<int> Ns = positive_ints(root, "N");
  root.finish();

  Output out;
  Csv csv({"N", "F", "exc", "exc_scaled"});
  json rows = json::array();
  for (int N : Ns) {
    const double F = monotone_1d(k, rho, N);
    const double xc = exc(k, rho, N, F);
    const double scaled = xc / std::pow(static_cast<double>(N), 1.0 + k.s);
    csv.cell(N).cell(F).cell(xc).cell(scaled).end_row();
    const SeparationBound sb = plan_separation_bound(k, rho, N);
    rows.push_back({{"N", N}, {"F", F}, {"exc", xc}, {"exc_scaled", scaled},
                    {"separation_bound", {{"radius", sb.radius}, {"diameter", sb.diameter}, {"vacuous", sb.vacuous}}}});
  }
  out.result["rows"] = std::move(rows);
  out.csv = csv.str();
  return out;
}

BallPacking read_packing(Obj& p, int d, std::uint64_t seed) {
  const double side = p.number("side");
  if (!(side > 0.0)) throw SchemaError(p.at("side"), "must be positive");
  Vec lower = Vec::Zero(d);
  if (p.has("lower")) {
    const auto lo = p.numbers("lower");
    if (static_cast<int>(lo.size()) != d) throw SchemaError(p.at("lower"), "expected " + std::to_string(d) + " numbers");
    lower = to_vec(lo);
  }
  p.skip("lower");
  const std::vector<double> ladder = p.numbers("ladder");
  SwissCheeseOptions so;
  so.seed = seed;
  so.seed_budget = static_cast<int>(p.integer("seed_budget", 16));
  try {
    return swiss_cheese(CubeDomain::from_lower(lower, side), ladder, so);
  } catch (const ParameterError& e) {
    throw SchemaError(p.at("ladder"), e.what());
  }
}

Output cmd_swiss_cheese(Obj& root, const Context& ctx) {
  const long d = root.integer("d");
  if (d < 1 || d > 3) throw SchemaError("d", "must be 1, 2 or 3");
  const BallPacking P = read_packing(root, static_cast<int>(d), require_seed(ctx));
  root.finish();

  std::vector<std::string> header{"family", "radius"};
  for (long j = 0; j < d; ++j) header.push_back("x" + std::to_string(j + 1));
  Csv csv(header);
  for (const Ball& b : P.balls) {
    csv.cell(b.family).cell(b.radius);
    for (int j = 0; j < d; ++j) csv.cell(b.center[j]);
    csv.end_row();
  }
  Output out;
  const PackingCertificate& c = P.certificate;
  out.result = {{"counts", P.counts},
                {"accepted_seed", P.seed},
                {"digest", hex64(P.digest())},
                {"certificate",
                 {{"disjoint", c.disjoint},
                  {"contained", c.contained},
                  {"density_window", c.density_window},
                  {"densities", c.densities},
                  {"window", {c.window_lo, c.window_hi}},
                  {"passed", c.passed()}}}};
  out.csv = csv.str();
  return out;
}

Output cmd_fg_split(Obj& root, const Context& ctx) {
  const RieszKernel k = read_kernel(root);
  const std::uint64_t seed = require_seed(ctx);
  Obj p = root.object("packing");
  const BallPacking P = read_packing(p, k.d, seed);
  p.finish();
  const PointConfiguration config = read_points(root, "points", k.d);
  FgSplitOptions fo;
  fo.seed = seed;
  fo.samples = root.integer("samples", 4000);
  fo.kappa = root.number("kappa", 0.5);
  fo.C = root.number("C", 0.0);
  if (fo.samples < 2) throw SchemaError("samples", "must be at least 2");
  if (!(fo.kappa > 0.0 && fo.kappa < 1.0)) throw SchemaError("kappa", "need 0 < kappa < 1");
  root.finish();

  const FgSplitResult r = fg_energy_split(k, config, P, fo);
  Output out;
  Csv csv({"quantity", "value"});
  const std::vector<std::pair<std::string, double>> rows = {
      {"weight", r.weight},     {"localized", r.localized}, {"standard_error", r.standard_error},
      {"localized_exact", r.localized_exact}, {"full", r.full}, {"residual", r.residual}, {"z_score", r.z_score()}};
  for (const auto& [name, v] : rows) {
    csv.cell(name).cell(v).end_row();
    out.result[name] = v;
  }
  out.result["samples"] = r.samples;
  out.result["within_3se"] = r.within(3.0);
  out.result["packing_digest"] = hex64(P.digest());
  out.csv = csv.str();
  return out;
}

Output cmd_scan_s(Obj& root, const Context& ctx) {
  const std::string problem = root.string("problem");
  if (problem != "jellium" && problem != "ot") throw SchemaError("problem", "expected \"jellium\" or \"ot\"");
  const long d = root.integer("d");
  const long N = root.integer("N");
  const std::vector<double> grid = root.numbers("s_grid");
  ScanOptions so;
  so.minimize.restarts = static_cast<int>(root.integer("restarts", 8));
  so.grid_m = static_cast<int>(root.integer("grid_m", 0));
  if (ctx.tolerance) so.minimize.gradient_tolerance = *ctx.tolerance;
  if (problem == "jellium") so.minimize.seed = require_seed(ctx);
  root.finish();
  if (d < 1 || d > 3) throw SchemaError("d", "must be 1, 2 or 3");
  if (N < 1) throw SchemaError("N", "must be positive");

  ScanResult r;
  try {
    r = scan_s(problem == "jellium" ? ScanProblem::Jellium : ScanProblem::Ot, static_cast<int>(d), static_cast<int>(N),
               grid, so);
  } catch (const ParameterError& e) {
    throw SchemaError("s_grid", e.what());
  }
  Csv csv({"s", "value"});
  for (std::size_t i = 0; i < r.s.size(); ++i) csv.cell(r.s[i]).cell(r.values[i]).end_row();
  Output out;
  out.result = {{"jumps", r.jumps},
                {"max_jump", nan_safe(r.max_jump)},
                {"diagnostic_defined", r.diagnostic_defined},
                {"endpoint_growth", r.endpoint_growth},
                {"warnings", r.warnings}};
  out.csv = csv.str();
  return out;
}

Output cmd_compare(Obj& root, const Context& ctx) {
  const RieszKernel k = read_kernel(root);
  CompareBudgets b = CompareBudgets::defaults(k.d);
  b.minimize.seed = require_seed(ctx);
  if (ctx.tolerance) b.minimize.gradient_tolerance = *ctx.tolerance;
  if (root.has("budgets")) {
    Obj bj = root.object("budgets");
    if (bj.has("jellium_N")) b.jellium_N = positive_ints(bj, "jellium_N");
    if (bj.has("ot_N")) b.ot_N = positive_ints(bj, "ot_N");
    b.grid_m = static_cast<int>(bj.integer("grid_m", b.grid_m));
    b.lattice = bj.string("lattice", b.lattice);
    b.minimize.restarts = static_cast<int>(bj.integer("restarts", b.minimize.restarts));
    bj.skip("jellium_N");
    bj.skip("ot_N");
    bj.finish();
  }
  root.skip("budgets");
  root.finish();

  const CompareReport r = compare_constants(k, b);
  Csv csv({"channel", "N", "value"});
  for (const auto& [N, v] : r.jellium.series) csv.cell("jellium").cell(static_cast<long>(N)).cell(v).end_row();
  for (const auto& [N, v] : r.ot.series) csv.cell("ot").cell(static_cast<long>(N)).cell(v).end_row();
  csv.cell("lattice").cell("").cell(r.lattice_per_point).end_row();
  json gaps = json::array();
  for (const auto& [N, g] : r.gaps) gaps.push_back({{"N", N}, {"gap", g}});
  Output out;
  out.result = {{"jellium", estimate_json(r.jellium)},
                {"ot", estimate_json(r.ot)},
                {"lattice", {{"value", nan_safe(r.lattice.value)}, {"error", r.lattice.error},
                             {"per_point_ordered_pairs", nan_safe(r.lattice_per_point)}}},
                {"gaps", gaps},
                {"difference", r.difference},
                {"combined_error", r.combined_error},
                {"easy_inequality", r.easy_inequality},
                {"all_negative", r.all_negative},
                {"warnings", r.warnings}};
  if (k.d == 1) out.result["d1_agreement"] = r.d1_agreement;
  out.csv = csv.str();
  return out;
}

PeriodicConfiguration named_cell(const std::string& name, int d) {
  PeriodicConfiguration base;
  base.zero_barycenter = true;
  if (name == "BCC") {
    const double a = std::cbrt(2.0);
    base.cell = CubeDomain::centered(3, a);
    base.base_points = PointConfiguration(3, {-a / 4, -a / 4, -a / 4, a / 4, a / 4, a / 4});
  } else if (name == "FCC") {
    const double a = std::cbrt(4.0), q = a / 4;
    base.cell = CubeDomain::centered(3, a);
    base.base_points = PointConfiguration(3, {-q, -q, -q, q, q, -q, q, -q, q, -q, q, q});
  } else if (name == "Zd") {
    base.cell = CubeDomain::centered(d, 1.0);
    base.base_points = PointConfiguration(d, std::vector<double>(d, 0.0));
  } else {
    throw SchemaError("cell", "unknown cell name (use BCC, FCC or Zd)");
  }
  if (base.cell.dim() != d) throw SchemaError("cell", "cell dimension differs from kernel.d");
  return base;
}

Output cmd_limits(Obj& root, const Context&) {
  const RieszKernel k = read_kernel(root);
  PeriodicConfiguration base;
  const json& cj = root.raw("cell");
  if (cj.is_string()) {
    base = named_cell(cj.get<std::string>(), k.d);
  } else {
    Obj c = root.object("cell");
    base.cell = read_cube(c, k.d);
    base.base_points = read_points(c, "points", k.d);
    base.zero_barycenter = true;
    c.finish();
  }
  const std::vector<double> Rs = root.numbers("R");
  root.finish();

  LimitReport r;
  try {
    r = comparison_limits(k, base, Rs);
  } catch (const ParameterError& e) {
    throw SchemaError("cell", e.what());
  }
  Csv csv({"R", "N", "d1", "d2"});
  for (const auto& row : r.rows) csv.cell(row.R).cell(row.N).cell(row.d1).cell(row.d2).end_row();
  Output out;
  out.result = {{"rhs1_spatial", nan_safe(r.rhs1_spatial)}, {"rhs1_fourier", nan_safe(r.rhs1_fourier)},
                {"rhs2_spatial", nan_safe(r.rhs2_spatial)}, {"rhs2_fourier", nan_safe(r.rhs2_fourier)},
                {"asserted", r.asserted},                   {"monotone1", r.monotone1},
                {"monotone2", r.monotone2},                 {"converged", r.converged},
                {"warnings", r.warnings}};
  out.csv = csv.str();
  return out;
}

}  // namespace

const std::vector<std::pair<std::string, Command>>& commands() {
  static const std::vector<std::pair<std::string, Command>> table = {
      {"energy", cmd_energy},       {"minimize", cmd_minimize},         {"lattice-const", cmd_lattice_const},
      {"mmot", cmd_mmot},           {"monotone1d", cmd_monotone1d},     {"swiss-cheese", cmd_swiss_cheese},
      {"fg-split", cmd_fg_split},   {"scan-s", cmd_scan_s},             {"compare", cmd_compare},
      {"limits", cmd_limits}};
  return table;
}

}  // namespace rieszlab::cli

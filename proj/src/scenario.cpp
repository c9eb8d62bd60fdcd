#include "spm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "spm/dyadic.hpp"
#include "spm/error.hpp"
#include "spm/maximal.hpp"
#include "spm/multiplier.hpp"
#include "spm/random.hpp"
#include "spm/spectral.hpp"
#include "spm/symbol.hpp"
#include "spm/verify.hpp"

namespace spm {

std::vector<std::string> study_catalog() {
  return {"rho", "weights", "apply", "kernels", "sparse", "norms", "commutator", "compactness"};
}

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

PotentialSpec parse_potential(const Json& j) {
  const std::string id = j.is_string() ? j.get<std::string>() : j.at("id").get<std::string>();
  const Json p = j.is_object() ? j : Json::object();
  if (id == "constant") return PotentialSpec::make_constant(get_or(p, "value", 1.0));
  if (id == "unit") return PotentialSpec::make_constant(1);
  if (id == "power") return PotentialSpec::make_power(get_or(p, "alpha", 2.0));
  if (id == "hermite") return PotentialSpec::make_hermite();
  if (id == "lipschitz-slab") {
    Point slope{0, 0, 0};
    if (p.contains("slope")) {
      const auto s = p.at("slope").get<std::vector<double>>();
      for (std::size_t a = 0; a < std::min<std::size_t>(s.size(), 3); ++a) slope[a] = s[a];
    }
    return PotentialSpec::make_lipschitz_slab(get_or(p, "alpha", 1.0), slope, get_or(p, "offset", 0.0));
  }
  fail(ErrorKind::Config, "unknown potential id '" + id + "'");
}

}  // namespace

ScenarioConfig parse_config(const Json& j, std::optional<std::uint64_t> seed_override) {
  ScenarioConfig c;
  try {
    c.scenario = get_or<std::string>(j, "scenario", "scenario");
    const Json& dom = j.at("domain");
    c.n = dom.at("n").get<int>();
    c.L = dom.at("L").get<double>();
    c.M = dom.at("M").get<int>();
    c.potential = parse_potential(j.at("potential"));
    c.symbol = get_or<std::string>(j, "symbol", "identity");
    make_symbol(c.symbol);
    c.partition = get_or<std::string>(j, "partition", "bump-integral-v1");
    if (c.partition != make_partition().id()) fail(ErrorKind::Config, "unknown partition id '" + c.partition + "'");
    if (j.contains("weights")) {
      const Json& w = j.at("weights");
      c.weight_kind = get_or<std::string>(w, "kind", "shifted_power");
      c.weight_exponents = get_or(w, "a", c.weight_exponents);
    }
    if (c.weight_kind != "unit" && c.weight_kind != "power" && c.weight_kind != "shifted_power")
      fail(ErrorKind::Config, "unknown weight kind '" + c.weight_kind + "'");
    c.b = get_or<std::string>(j, "b", "bump");
    if (c.b != "bump" && c.b != "linear-bump" && c.b != "constant") fail(ErrorKind::Config, "unknown b id '" + c.b + "'");
    if (j.contains("exponents")) {
      const Json& e = j.at("exponents");
      c.p = get_or(e, "p", c.p);
      c.r = get_or(e, "r", c.r);
      c.p0 = get_or(e, "p0", c.p0);
      c.theta = get_or(e, "theta", c.theta);
      c.N = get_or(e, "N", c.N);
    }
    if (!j.contains("seed") && !seed_override) fail(ErrorKind::Config, "seed is mandatory");
    c.seed = seed_override ? *seed_override : j.at("seed").get<std::uint64_t>();
    c.studies = get_or(j, "studies", std::vector<std::string>{});
    const auto catalog = study_catalog();
    for (const auto& s : c.studies)
      if (std::find(catalog.begin(), catalog.end(), s) == catalog.end())
        fail(ErrorKind::Config, "unknown study id '" + s + "'");
    if (j.contains("options")) {
      const Json& o = j.at("options");
      c.pieces = get_or(o, "pieces", c.pieces);
      c.random_cubes = get_or(o, "random_cubes", c.random_cubes);
      c.sparse_functions = get_or(o, "sparse_functions", c.sparse_functions);
      c.sparse_level = get_or(o, "sparse_level", c.sparse_level);
      c.alpha = get_or(o, "alpha", c.alpha);
      c.probe_budget = get_or(o, "probe_budget", c.probe_budget);
      c.shen_pairs = get_or(o, "shen_pairs", c.shen_pairs);
      c.A_grid = get_or(o, "A_grid", c.A_grid);
      c.t_grid = get_or(o, "t_grid", c.t_grid);
      c.gamma_grid = get_or(o, "gamma_grid", c.gamma_grid);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("malformed config: ") + e.what());
  }
  if (c.n < 1 || c.n > 3 || c.M < 2 || !(c.L > 0)) fail(ErrorKind::Config, "domain needs n in 1..3, M >= 2, L > 0");
  c.echo = j;
  c.echo["seed"] = c.seed;
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("config parse error: ") + e.what());
  }
  return parse_config(j, seed_override);
}

namespace {

struct Context {
  const ScenarioConfig& cfg;
  Domain d;
  std::optional<CriticalFunctionTable> table_;
  std::shared_ptr<const SpectralDecomposition> dec_;

  explicit Context(const ScenarioConfig& c) : cfg(c), d(c.n, c.L, c.M) {}

  const CriticalFunctionTable& table() {
    if (!table_) table_.emplace(build_critical_table(d, cfg.potential));
    return *table_;
  }
  std::shared_ptr<const SpectralDecomposition> dec() {
    if (!dec_) dec_ = decompose_shared(d, cfg.potential);
    return dec_;
  }
  std::vector<WeightSpec> weights() const {
    std::vector<WeightSpec> w;
    if (cfg.weight_kind == "unit") return {WeightSpec::unit(d)};
    for (double a : cfg.weight_exponents)
      w.push_back(cfg.weight_kind == "power" ? WeightSpec::power(d, a) : WeightSpec::shifted_power(d, a));
    return w;
  }
  GridFunction b() const {
    const int n = d.dim();
    const double R = d.half_width() / 4;
    return GridFunction::sample(d, [&](const Point& x) {
      if (cfg.b == "constant") return 1.0;
      const double s = norm(x, n) / R;
      const double bump = s < 1 ? std::exp(1 - 1 / (1 - s * s)) : 0.0;
      return cfg.b == "bump" ? bump : x[0] * bump;
    });
  }
  ComplexGridFunction random_function(Rng& rng) const {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(d.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(rng.normal(), rng.normal());
    return ComplexGridFunction(d, v);
  }
};

StudyReport study_rho(Context& ctx) {
  StudyReport rep;
  const CriticalFunctionTable& t = ctx.table();
  const Eigen::VectorXd& rho = t.rho().values();
  rep.metric("rho_min", rho.minCoeff(), "critical-radius");
  rep.metric("rho_max", rho.maxCoeff(), "critical-radius");
  rep.metric("rho_at_origin", t.at(Point{0, 0, 0}), "critical-radius", "multilinear interpolation");
  rep.metric("flagged_nodes", static_cast<double>(t.flagged_nodes()), "count");
  const auto pairs = sample_node_pairs(ctx.d, ctx.cfg.shen_pairs, ctx.cfg.seed);
  const ShenConstants s = fit_shen_constants(t, pairs);
  rep.metric("shen_l0", s.l0, "lattice-fit");
  rep.metric("shen_C0", s.C0, "lattice-fit");
  rep.metric("shen_pairs", static_cast<double>(s.pairs_checked), "count");
  rep.metric("shen_violations", static_cast<double>(s.violations), "count");
  rep.criterion("shen_fit", s.violations == 0);
  const CriticalCovering cov = critical_covering(t);
  rep.metric("covering_balls", static_cast<double>(cov.balls.size()), "greedy");
  rep.metric("covering_fraction", cov.coverage_fraction, "greedy");
  rep.fit("covering_overlap", cov.fitted_N, cov.fitted_C);
  rep.criterion("covering_complete", cov.coverage_fraction == 1);
  return rep;
}

StudyReport study_weights(Context& ctx) {
  StudyReport rep;
  const auto& cfg = ctx.cfg;
  const CubeFamily fam = build_cube_family(ctx.d, cfg.random_cubes, cfg.seed);
  rep.metric("family_size", static_cast<double>(fam.size()), "count", "seed " + std::to_string(fam.seed));
  const CriticalFunctionTable& t = ctx.table();
  bool monotone = true;
  const std::vector<double> thetas{0, cfg.theta, cfg.theta + 1, cfg.theta + 2};
  const auto ws = ctx.weights();
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const std::string tag = "[" + std::to_string(i) + "]";
    double prev = INFINITY;
    std::vector<double> sorted = thetas;
    std::sort(sorted.begin(), sorted.end());
    for (double th : sorted) {
      const double v = ap_characteristic(ws[i].values, cfg.p, th, t, fam).value;
      monotone = monotone && v <= prev * (1 + 1e-12);
      prev = v;
    }
    const ApEstimate est = ap_characteristic(ws[i].values, cfg.p, cfg.theta, t, fam);
    rep.metric("characteristic" + tag, est.value, "cube-family-max", ws[i].describe());
    rep.metric("characteristic_half_family" + tag, est.half_family_value, "cube-family-max", ws[i].describe());
    const ReverseHolderFit rh = reverse_holder(ws[i].values, cfg.p, cfg.theta, est.value, t, fam);
    rep.metric("rh_exponent" + tag, rh.r, "closed-form");
    rep.metric("rh_constant" + tag, rh.C, "cube-family-max");
    rep.metric("rh_N0" + tag, rh.N0, "lattice-fit");
  }
  rep.criterion("characteristic_monotone_in_theta", monotone);
  const double unit = ap_characteristic(WeightSpec::unit(ctx.d).values, cfg.p, cfg.theta, t, fam).value;
  rep.metric("unit_characteristic", unit, "cube-family-max");
  rep.criterion("unit_characteristic_is_one", unit == 1);
  const int depth = max_dyadic_depth(ctx.d);
  const StudyReport mx = dyadic_maximal_bound_study(ctx.d, build_systems(ctx.d, depth), {1.5, 2, 3}, 20, cfg.seed);
  rep.merge(mx, "maximal.");
  return rep;
}

StudyReport study_apply(Context& ctx) {
  StudyReport rep;
  const auto dec = ctx.dec();
  rep.metric("eigen_residual", dec->residual(), "eigen-dense");
  rep.metric("gram_error", dec->gram_error(), "eigen-dense");
  rep.metric("lambda_min", dec->lambda_min(), "eigen-dense");
  rep.metric("lambda_max", dec->lambda_max(), "eigen-dense");
  const SymbolSpec sigma = make_symbol(ctx.cfg.symbol);
  Rng rng(ctx.cfg.seed);
  double worst = 0;
  for (int j = 0; j <= ctx.cfg.pieces; ++j) {
    const SymbolSpec piece = dyadic_piece(sigma, j);
    const ComplexGridFunction f = ctx.random_function(rng);
    QuadratureReport qr;
    const auto a = apply_piece_quadrature(*dec, piece, j, f, {}, &qr);
    const auto b = apply_spectral(dec, piece, f);
    // a piece that vanishes on the spectrum has nothing to be relative to; use |f|
    const double nb = b.values().norm();
    const double err = (a.values() - b.values()).norm() / (nb > 0 ? nb : f.values().norm());
    worst = std::max(worst, err);
    const std::string tag = "[j=" + std::to_string(j) + "]";
    rep.metric("route_difference" + tag, err, "quadrature-vs-spectral");
    rep.metric("quadrature_tmax" + tag, qr.tmax, "quadrature");
    rep.metric("quadrature_tail" + tag, qr.tail, "quadrature");
  }
  rep.criterion("route_equivalence", worst <= 1e-6);
  if (!sigma.x_dependent) {
    const Eigen::VectorXcd m =
        spectral_values(*dec, [&](double lam) { return sigma(Point{0, 0, 0}, ctx.d.dim(), std::sqrt(lam)); });
    const double mmax = m.cwiseAbs().maxCoeff();
    const MultiplierOperator T(dec, sigma);
    const double nrm = opnorm_weighted_l2(T, WeightSpec::unit(ctx.d).values);
    rep.metric("max_abs_multiplier", mmax, "spectral");
    rep.metric("l2_norm", nrm, "lanczos");
    if (mmax <= 1) rep.criterion("spectral_contraction", nrm <= 1 + 1e-12);
  }
  return rep;
}

StudyReport study_kernels(Context& ctx) {
  StudyReport rep;
  const auto dec = ctx.dec();
  const SymbolSpec sigma = make_symbol(ctx.cfg.symbol);
  std::vector<Eigen::MatrixXcd> K;
  for (int j = 0; j <= ctx.cfg.pieces; ++j) K.push_back(kernel_matrix(dec, dyadic_piece(sigma, j)));
  const int n = ctx.d.dim();
  const auto rows = kernel_decay_check(ctx.d, K, ctx.table(), {0, 1, 2}, {0, static_cast<double>(n)}, {0, 1});
  for (const auto& r : rows) {
    const std::string tag = "[N=" + std::to_string(static_cast<int>(r.N)) + ",beta=" +
                            std::to_string(static_cast<int>(r.beta)) + ",grad=" + std::to_string(r.gamma) + "]";
    rep.metric("kernel_constant" + tag, r.C, "node-pair-max");
    rep.metric("kernel_spread" + tag, r.spread, "node-pair-max");
    rep.criterion("kernel_uniform" + tag, r.pass);
  }
  const auto [slope, res] = kernel_scaling_slope(ctx.d, K);
  rep.fit("kernel_log2_slope", slope, res);
  rep.criterion("kernel_scaling", std::abs(slope - n) <= 0.5);
  bool heat_finite = true;
  for (const auto& h : heat_kernel_fit(*dec, ctx.table(), {0.01, 0.1, 1}, ctx.cfg.N)) {
    rep.metric("heat_constant[t=" + std::to_string(h.t) + "]", h.C, "node-pair-max");
    heat_finite = heat_finite && std::isfinite(h.C);
  }
  rep.criterion("heat_kernel_finite", heat_finite);
  const double summed = summed_kernel_fit(ctx.d, K, ctx.table(), ctx.cfg.N);
  rep.metric("summed_kernel_constant", summed, "node-pair-max");
  rep.criterion("summed_kernel_finite", std::isfinite(summed));
  return rep;
}

StudyReport study_sparse(Context& ctx) {
  StudyReport rep;
  const auto& cfg = ctx.cfg;
  const Domain& d = ctx.d;
  const auto dec = ctx.dec();
  auto T = std::make_shared<const MultiplierOperator>(dec, make_symbol(cfg.symbol));
  const auto systems = build_systems(d, max_dyadic_depth(d));
  const DyadicSystem& sys = systems[0];
  const int level = std::min(cfg.sparse_level, sys.depth);
  const auto& cubes = sys.levels.at(static_cast<std::size_t>(level));
  const std::size_t index = cubes.size() / 2;
  const CellBox support = dilate(d, cubes[index], cfg.alpha);
  Rng rng(cfg.seed);
  bool sparse = true, dominated = true;
  double worst_C = 0, worst_violation = 0;
  std::vector<ComplexGridFunction> fs;
  for (std::size_t k = 0; k < cfg.sparse_functions; ++k) {
    ComplexGridFunction f(d);
    for_each_cell(support, d.dim(), [&](const Index3& idx) { f[d.flatten(idx)] = cplx(rng.normal(), rng.normal()); });
    const auto res = sparse_domination_check(*T, f, sys, level, index, cfg.alpha, cfg.r);
    std::string why;
    const bool ok = is_sparse(res.family, d, &why);
    sparse = sparse && ok && !res.family.degenerate;
    dominated = dominated && std::isfinite(res.C_S) && res.violation_fraction <= 0.01;
    worst_C = std::max(worst_C, res.C_S);
    worst_violation = std::max(worst_violation, res.violation_fraction);
    rep.metric("C_S[" + std::to_string(k) + "]", res.C_S, "quantile-99");
    rep.metric("family_size[" + std::to_string(k) + "]", static_cast<double>(res.family.cubes.size()), "stopping-time");
    fs.push_back(std::move(f));
  }
  rep.metric("max_C_S", worst_C, "quantile-99");
  rep.metric("max_violation_fraction", worst_violation, "exact");
  rep.criterion("families_sparse", sparse);
  rep.criterion("pointwise_domination", dominated);
  if (!fs.empty()) {
    const GridFunction b = ctx.b();
    const auto res = commutator_sparse_domination_check(T, b, fs[0], systems, 0, level, index, cfg.alpha);
    rep.metric("commutator_C_S", res.C_S, "quantile-99");
    rep.metric("commutator_violation_fraction", res.violation_fraction, "exact");
    rep.criterion("commutator_domination", std::isfinite(res.C_S) && res.violation_fraction <= 0.01);
  }
  const auto& shen = ctx.table().shen();
  const double l0 = shen ? shen->l0 : fit_shen_constants(ctx.table(), sample_node_pairs(d, cfg.shen_pairs, cfg.seed)).l0;
  rep.metric("N_threshold", commutator_N_threshold(d.dim(), cfg.theta, l0), "closed-form",
             "N > M + (theta + M)(1 + l0) with M = n; N is a parameter, not chosen");
  rep.metric("N", cfg.N, "config");
  return rep;
}

StudyReport study_norms(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const MultiplierOperator T(ctx.dec(), make_symbol(cfg.symbol));
  const CubeFamily fam = build_cube_family(ctx.d, cfg.random_cubes, cfg.seed);
  StudyReport rep =
      weighted_bound_study(T, ctx.weights(), cfg.p, cfg.r, cfg.theta, ctx.table(), fam, cfg.probe_budget);
  const GridFunction unit = WeightSpec::unit(ctx.d).values;
  const double exact = opnorm_weighted_l2(T, unit);
  const double lower = opnorm_lp_lower(T, unit, 2, cfg.probe_budget);
  rep.metric("l2_norm_unit", exact, "lanczos");
  rep.metric("l2_lower_bound_unit", lower, "probe-lower-bound");
  rep.criterion("lower_bound_consistent", lower <= exact * (1 + 1e-8) && exact - lower <= 1e-6 * exact);
  return rep;
}

StudyReport study_commutator(Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto T = std::make_shared<const MultiplierOperator>(ctx.dec(), make_symbol(cfg.symbol));
  const CubeFamily fam = build_cube_family(ctx.d, cfg.random_cubes, cfg.seed);
  const GridFunction b = ctx.b();
  StudyReport rep = commutator_bound_check(T, b, ctx.weights(), cfg.p, cfg.theta, ctx.table(), fam, cfg.probe_budget);
  Rng rng(cfg.seed);
  const ComplexGridFunction f = ctx.random_function(rng);
  const GridFunction b2(ctx.d, 2 * b.values());
  const Eigen::VectorXcd one = commutator_apply(b, *T, f).values();
  const Eigen::VectorXcd two = commutator_apply(b2, *T, f).values();
  const double scale = two.norm();
  const double lin = scale > 0 ? (two - 2 * one).norm() / scale : (two - 2 * one).norm();
  rep.metric("linearity_defect", lin, "direct");
  rep.criterion("linear_in_b", lin <= 1e-12);
  return rep;
}

StudyReport study_compactness(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Domain& d = ctx.d;
  const auto K = kernel_matrix(ctx.dec(), make_symbol(cfg.symbol));
  CompactnessOptions o;
  const double L = d.half_width(), h = d.spacing();
  o.A_grid = cfg.A_grid.empty() ? std::vector<double>{0, L / 8, L / 4, 3 * L / 8, L / 2, 5 * L / 8, 3 * L / 4} : cfg.A_grid;
  // L/6 down to L/384: past about L/6 the modulus saturates at the probe norm and wobbles
  if (cfg.t_grid.empty())
    for (int k = 0; k <= 6; ++k) o.t_grid.push_back(std::ldexp(L / 6, -k));
  else
    o.t_grid = cfg.t_grid;
  o.gamma_grid = cfg.gamma_grid.empty() ? std::vector<double>{4 * h, 8 * h, 16 * h, 32 * h} : cfg.gamma_grid;
  o.seed = cfg.seed;
  const auto ws = ctx.weights();
  return compactness_probe(d, K, ctx.b(), ws.front().values, o).report;
}

}  // namespace

StudyReport run_study(const ScenarioConfig& cfg, const std::string& study) {
  Context ctx(cfg);
  StudyReport rep;
  if (study == "rho")
    rep = study_rho(ctx);
  else if (study == "weights")
    rep = study_weights(ctx);
  else if (study == "apply")
    rep = study_apply(ctx);
  else if (study == "kernels")
    rep = study_kernels(ctx);
  else if (study == "sparse")
    rep = study_sparse(ctx);
  else if (study == "norms")
    rep = study_norms(ctx);
  else if (study == "commutator")
    rep = study_commutator(ctx);
  else if (study == "compactness")
    rep = study_compactness(ctx);
  else
    fail(ErrorKind::Config, "unknown study id '" + study + "'");
  rep.scenario = cfg.scenario;
  rep.inputs = cfg.echo;
  return rep;
}

ScenarioOutcome run_scenario(const ScenarioConfig& cfg, const std::vector<std::string>& only) {
  ScenarioOutcome out;
  out.report.scenario = cfg.scenario;
  out.report.inputs = cfg.echo;
  const std::vector<std::string>& list = only.empty() ? cfg.studies : only;
  for (const std::string& s : list) {
    StudyReport rep;
    try {
      rep = run_study(cfg, s);
      rep.criterion("completed", true);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      rep.scenario = cfg.scenario;
      rep.inputs = cfg.echo;
      rep.metric("error", NAN, "failed", e.what());
      rep.criterion("completed", false);
    }
    out.report.merge(rep, s + ".");
    out.studies.emplace_back(s, std::move(rep));
  }
  out.exit_code = out.report.all_pass() ? 0 : 1;
  return out;
}

void write_outputs(const ScenarioOutcome& outcome, const std::string& scenario, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string());
  emit_report(outcome.report, dir / (scenario + ".json"), ReportFormat::Json);
  for (const auto& [name, rep] : outcome.studies)
    emit_report(rep, dir / (scenario + "_" + name + ".csv"), ReportFormat::Csv);
}

}  // namespace spm

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "spm/multiplier.hpp"
#include "spm/random.hpp"
#include "spm/verify.hpp"

using namespace spm;

namespace {

std::shared_ptr<const SpectralDecomposition> hermite(double L, int M) {
  DecomposeOptions o;
  o.cache_dir = std::filesystem::path{};
  return decompose_shared(Domain(1, L, M), PotentialSpec::make_hermite(), o);
}

GridFunction random_weight(const Domain& d, std::uint64_t seed) {
  Rng rng(seed);
  return GridFunction::sample(d, [&](const Point&) { return 0.2 + rng.uniform(0, 3); });
}

}  // namespace

TEST_CASE("weighted L2 norm: identity, spectral multiplier, diagonal case") {
  auto dec = hermite(4, 48);
  const Domain& d = dec->domain();
  MultiplierOperator I(dec, make_symbol("identity"));
  CHECK(opnorm_weighted_l2(I, WeightSpec::unit(d).values) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(opnorm_weighted_l2(I, random_weight(d, 1)) == doctest::Approx(1.0).epsilon(1e-8));

  SymbolSpec s = make_symbol("multiplier");
  MultiplierOperator T(dec, s);
  double top = 0;
  for (std::size_t k = 0; k < dec->size(); ++k)
    top = std::max(top, std::abs(s({0, 0, 0}, 1, std::sqrt(dec->eigenvalues()[k]))));
  CHECK(std::abs(opnorm_weighted_l2(T, WeightSpec::unit(d).values) - top) <= 1e-8);

  Domain tiny(1, 1, 8);
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(8, 8);
  const double t[8] = {0.5, -2.0, 1.25, 0.1, 0.3, -0.7, 1.9, 0.0};
  for (int i = 0; i < 8; ++i) D(i, i) = t[i];
  MatrixOperator Dop(tiny, D);
  GridFunction w = random_weight(tiny, 2);
  CHECK(opnorm_weighted_l2(Dop, w) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("maximiser attains the norm") {
  auto dec = hermite(4, 48);
  const Domain& d = dec->domain();
  MultiplierOperator T(dec, make_symbol("coupled"));
  GridFunction w = WeightSpec::shifted_power(d, 1).values;
  NormResult r = opnorm_weighted_l2_detail(T, w);
  ComplexGridFunction f(d, r.maximiser);
  CHECK(lp_norm_weighted(f, 2, w) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(lp_norm_weighted(T.apply(f), 2, w) == doctest::Approx(r.value).epsilon(1e-7));
  CHECK(r.iterations > 0);
}

TEST_CASE("Lp lower bound") {
  auto dec = hermite(4, 48);
  const Domain& d = dec->domain();
  for (const std::string& id : {"multiplier", "separable", "coupled"}) {
    MultiplierOperator T(dec, make_symbol(id));
    GridFunction w = WeightSpec::shifted_power(d, 0.75).values;
    const double exact = opnorm_weighted_l2(T, w);
    const double lower = opnorm_lp_lower(T, w, 2, 16);
    CHECK(std::abs(lower - exact) <= 1e-6 * exact);
    CHECK(lower <= exact * (1 + 1e-9));
    for (double p : {1.5, 3.0}) {
      double prev = 0;
      for (std::size_t budget : {1u, 4u, 16u, 32u}) {
        const double v = opnorm_lp_lower(T, w, p, budget);
        CHECK(v >= prev);
        prev = v;
      }
    }
  }
}

TEST_CASE("weighted bound study on the identity") {
  Domain d(1, 4, 64);
  auto table = build_critical_table(d, PotentialSpec::make_hermite());
  CubeFamily fam = build_cube_family(d, 100, 3);
  IdentityOperator I(d);
  std::vector<WeightSpec> ws;
  for (double a : {0.0, 0.5, 1.0, 1.5, 2.0}) ws.push_back(WeightSpec::shifted_power(d, a));
  StudyReport rep = weighted_bound_study(I, ws, 2, 1, 0, table, fam, 8);
  for (const Metric& m : rep.metrics)
    if (m.name.rfind("norm", 0) == 0) CHECK(m.value == doctest::Approx(1.0).epsilon(1e-8));
  REQUIRE(!rep.fits.empty());
  CHECK(std::abs(rep.fits[0].second.value) <= 1e-6);
  CHECK(rep.all_pass());

  std::vector<WeightSpec> flat{WeightSpec::unit(d), WeightSpec::unit(d)};
  try {
    weighted_bound_study(I, flat, 2, 1, 0, table, fam, 8);
    FAIL("expected InsufficientSpread");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientSpread);
  }
}

TEST_CASE("sparse domination check") {
  auto dec = hermite(4, 64);
  const Domain& d = dec->domain();
  auto systems = build_systems(d, 5);
  MultiplierOperator T(dec, make_symbol("coupled"));
  SparseDominationResult zero = sparse_domination_check(T, ComplexGridFunction(d), systems[0], 2, 1, 3, 1);
  CHECK(zero.C_S == 0.0);
  CHECK(zero.violation_fraction == 0.0);

  IdentityOperator I(d);
  Rng rng(4);
  ComplexGridFunction f(d);
  const CellBox root = systems[0].levels[2][1];
  const CellBox aroot = dilate(d, root, 3);
  for_each_cell(aroot, 1, [&](const Index3& idx) { f[d.flatten(idx)] = rng.normal(); });
  SparseDominationResult id = sparse_domination_check(I, f, systems[0], 2, 1, 3, 1);
  CHECK(std::isfinite(id.C_S));
  CHECK(id.violation_fraction <= 0.01);
  CHECK(is_sparse(id.family, d));

  SparseDominationResult tr = sparse_domination_check(T, f, systems[0], 2, 1, 3, 1);
  CHECK(std::isfinite(tr.C_S));
  CHECK(tr.violation_fraction <= 0.01);

  GridFunction b = GridFunction::sample(d, [](const Point& x) { return std::exp(-x[0] * x[0]); });
  auto Tp = std::make_shared<MultiplierOperator>(dec, make_symbol("coupled"));
  SparseDominationResult cm = commutator_sparse_domination_check(Tp, b, f, systems, 0, 2, 1, 3);
  CHECK(std::isfinite(cm.C_S));
  CHECK(cm.violation_fraction <= 0.01);
}

TEST_CASE("commutator N threshold") {
  CHECK(commutator_N_threshold(1, 0, 0.25) == doctest::Approx(2.25));
  CHECK(commutator_N_threshold(3, 2, 1) == doctest::Approx(13.0));
}

TEST_CASE("commutator bound check homogeneity and trivial b") {
  auto dec = hermite(4, 64);
  const Domain& d = dec->domain();
  auto table = build_critical_table(d, PotentialSpec::make_hermite());
  CubeFamily fam = build_cube_family(d, 100, 5);
  auto T = std::make_shared<MultiplierOperator>(dec, make_symbol("coupled"));
  std::vector<WeightSpec> ws;
  for (double a : {0.0, 0.5, 1.0, 1.5}) ws.push_back(WeightSpec::shifted_power(d, a));

  GridFunction c = GridFunction::sample(d, [](const Point&) { return 1.5; });
  StudyReport triv = commutator_bound_check(T, c, ws, 2, 0, table, fam, 8);
  CHECK(triv.all_pass());

  GridFunction b = GridFunction::sample(d, [](const Point& x) { return std::exp(-x[0] * x[0]); });
  GridFunction b2(d, 2 * b.values());
  CommutatorOperator C1(b, T), C2(b2, T);
  GridFunction w = ws[2].values;
  const double n1 = opnorm_weighted_l2(C1, w), n2 = opnorm_weighted_l2(C2, w);
  CHECK(n2 == doctest::Approx(2 * n1).epsilon(1e-8));
}

TEST_CASE("kernel decay and heat kernel fits are finite") {
  auto dec = hermite(4, 64);
  const Domain& d = dec->domain();
  auto table = build_critical_table(d, PotentialSpec::make_hermite());
  std::vector<Eigen::MatrixXcd> kernels;
  for (const auto& p : dyadic_pieces(make_symbol("multiplier"), 4)) kernels.push_back(kernel_matrix(dec, p));
  auto rows = kernel_decay_check(d, kernels, table, {0, 1}, {0, 1}, {0, 1});
  CHECK(rows.size() == 8);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.C));
    CHECK(r.C_j.size() == kernels.size());
  }
  auto [slope, resid] = kernel_scaling_slope(d, kernels);
  CHECK(std::isfinite(slope));
  CHECK(std::isfinite(resid));
  for (const auto& h : heat_kernel_fit(*dec, table, {0.01, 0.1, 1}, 1)) CHECK(std::isfinite(h.C));
  CHECK(std::isfinite(summed_kernel_fit(d, kernels, table, 1)));
}

TEST_CASE("compactness probe: constant b and identity") {
  auto dec = hermite(4, 64);
  const Domain& d = dec->domain();
  GridFunction w = WeightSpec::unit(d).values;
  CompactnessOptions opts;
  opts.A_grid = {0, 1, 2, 3};
  opts.t_grid = {1, 0.5, 0.25};
  opts.gamma_grid = {4 * d.spacing(), 8 * d.spacing()};
  opts.probes = 16;
  opts.singular_index = 5;

  Eigen::MatrixXcd K = kernel_matrix(dec, make_symbol("coupled"));
  GridFunction c = GridFunction::sample(d, [](const Point&) { return 1.0; });
  auto sigma_1 = [](const CompactnessResult& r) {
    for (const Metric& m : r.report.metrics)
      if (m.name == "sigma_1") return m.value;
    return -1.0;
  };
  CompactnessResult rc = compactness_probe(d, K, c, w, opts);
  CHECK(sigma_1(rc) >= 0);
  CHECK(sigma_1(rc) <= 1e-10);

  Eigen::MatrixXcd Kid = kernel_matrix(dec, make_symbol("identity"));
  GridFunction b = GridFunction::sample(d, [](const Point& x) { return std::exp(-x[0] * x[0]); });
  CompactnessResult ri = compactness_probe(d, Kid, b, w, opts);
  CHECK(sigma_1(ri) <= 1e-10);
  for (double v : ri.tail) CHECK(v <= 1e-10);
  for (double v : ri.translation) CHECK(v <= 1e-10);

  auto probes = kr_probes(d, w, 16, 1);
  CHECK(probes.size() == 16);
  for (const auto& p : probes) CHECK(lp_norm_weighted(p, 2, w) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dyadic maximal bound study") {
  Domain d(1, 4, 64);
  auto systems = build_systems(d, 5);
  StudyReport rep = dyadic_maximal_bound_study(d, systems, {1.5, 2, 3}, 20, 3);
  CHECK(rep.all_pass());
}

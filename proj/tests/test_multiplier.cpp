#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "spm/multiplier.hpp"
#include "spm/random.hpp"

using namespace spm;

namespace {

std::shared_ptr<const SpectralDecomposition> hermite(double L, int M) {
  DecomposeOptions o;
  o.cache_dir = std::filesystem::path{};
  return decompose_shared(Domain(1, L, M), PotentialSpec::make_hermite(), o);
}

ComplexGridFunction noise(const Domain& d, std::uint64_t seed) {
  Rng rng(seed);
  ComplexGridFunction f(d);
  for (std::size_t i = 0; i < d.size(); ++i) f[i] = cplx(rng.normal(), rng.normal());
  return f;
}

double l2(const ComplexGridFunction& f) { return std::sqrt(f.domain().cell_volume() * f.values().squaredNorm()); }

double l2_diff(const ComplexGridFunction& a, const ComplexGridFunction& b) {
  return std::sqrt(a.domain().cell_volume() * (a.values() - b.values()).squaredNorm());
}

double rel(const ComplexGridFunction& a, const ComplexGridFunction& b) {
  return (a.values() - b.values()).norm() / std::max(b.values().norm(), 1e-300);
}

}  // namespace

TEST_CASE("identity symbol is the identity") {
  auto dec = hermite(6, 64);
  ComplexGridFunction f = noise(dec->domain(), 1);
  CHECK((apply_spectral(dec, make_symbol("identity"), f).values() - f.values()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("x-independent contraction") {
  auto dec = hermite(6, 64);
  for (std::uint64_t s = 0; s < 10; ++s) {
    ComplexGridFunction f = noise(dec->domain(), 10 + s);
    CHECK(l2(apply_spectral(dec, make_symbol("multiplier"), f)) <= l2(f) + 1e-12);
  }
}

TEST_CASE("adjoint and dense forms agree with apply") {
  auto dec = hermite(4, 32);
  const Domain& d = dec->domain();
  for (const std::string& id : symbol_catalog()) {
    MultiplierOperator T(dec, make_symbol(id));
    ComplexGridFunction f = noise(d, 3), g = noise(d, 4);
    const cplx lhs = d.cell_volume() * g.values().dot(T.apply(f).values());
    const cplx rhs = d.cell_volume() * T.apply_adjoint(g).values().dot(f.values());
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
    Eigen::VectorXcd viaDense = T.dense() * f.values();
    CHECK((viaDense - T.apply(f).values()).cwiseAbs().maxCoeff() <= 1e-10 * viaDense.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("partial sums of pieces exhaust the spectrum") {
  auto dec = hermite(6, 64);
  int J = 0;
  while (std::ldexp(1.0, J - 2) <= std::sqrt(dec->lambda_max())) ++J;
  for (const std::string& id : symbol_catalog()) {
    SymbolSpec s = make_symbol(id);
    ComplexGridFunction f = noise(dec->domain(), 5);
    ComplexGridFunction full = apply_spectral(dec, s, f);
    ComplexGridFunction sum(dec->domain());
    for (const auto& piece : dyadic_pieces(s, J)) sum.values() += apply_spectral(dec, piece, f).values();
    CHECK(rel(sum, full) <= 1e-12);
  }
}

TEST_CASE("quadrature route agrees with the spectral route at small size") {
  auto dec = hermite(6, 64);
  ComplexGridFunction f = noise(dec->domain(), 6);
  for (const std::string& id : symbol_catalog())
    for (int j = 0; j <= 3; ++j) {
      SymbolSpec piece = dyadic_piece(make_symbol(id), j);
      QuadratureReport rep;
      ComplexGridFunction q = apply_piece_quadrature(*dec, piece, j, f, {}, &rep);
      ComplexGridFunction s = apply_spectral(dec, piece, f);
      // the j = 0 piece nearly vanishes on the Hermite spectrum, so measure against |f| too
      CHECK_MESSAGE(l2_diff(q, s) <= 1e-6 * std::max(l2(s), l2(f)), id << " j=" << j);
      CHECK(rep.tail <= 1e-8);
    }
}

TEST_CASE("quadrature kills eigenvectors outside the piece support") {
  auto dec = hermite(6, 64);
  const Domain& d = dec->domain();
  const int j = 2;
  SymbolSpec piece = dyadic_piece(make_symbol("separable"), j);
  int tested = 0;
  for (std::size_t k = 0; k < dec->size(); k += 3) {
    const double eta = std::sqrt(dec->eigenvalues()[k]);
    if (eta > std::ldexp(1.0, j - 2) && eta < std::ldexp(1.0, j)) continue;
    ComplexGridFunction u(d);
    u.values() = dec->vectors().col(k).cast<cplx>();
    CHECK(l2(apply_piece_quadrature(*dec, piece, j, u)) <= 1e-6);
    if (++tested == 6) break;
  }
  CHECK(tested > 0);
}

TEST_CASE("halving dtau barely changes the quadrature output") {
  auto dec = hermite(6, 64);
  ComplexGridFunction f = noise(dec->domain(), 7);
  for (int j : {0, 2}) {
    SymbolSpec piece = dyadic_piece(make_symbol("coupled"), j);
    QuadratureParams coarse, fine;
    fine.dtau = coarse.dtau / 2;
    ComplexGridFunction a = apply_piece_quadrature(*dec, piece, j, f, coarse);
    ComplexGridFunction b = apply_piece_quadrature(*dec, piece, j, f, fine);
    CHECK((a.values() - b.values()).norm() <= 1e-7 * std::max(b.values().norm(), f.values().norm()));
  }
}

TEST_CASE("kernel matrix examples") {
  auto dec = hermite(4, 32);
  const Domain& d = dec->domain();
  int J = 0;
  while (std::ldexp(1.0, J - 2) <= std::sqrt(dec->lambda_max())) ++J;
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(d.size(), d.size());
  for (const auto& p : dyadic_pieces(make_symbol("identity"), J)) sum += kernel_matrix(dec, p);
  Eigen::MatrixXcd expect = Eigen::MatrixXcd::Identity(d.size(), d.size()) / d.cell_volume();
  CHECK((sum - expect).cwiseAbs().maxCoeff() <= 1e-10 / d.cell_volume());

  Eigen::MatrixXcd K = kernel_matrix(dec, dyadic_piece(make_symbol("multiplier"), 2));
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * K.cwiseAbs().maxCoeff());

  for (const std::string& id : symbol_catalog()) {
    SymbolSpec piece = dyadic_piece(make_symbol(id), 1);
    DenseKernelOperator op(d, kernel_matrix(dec, piece));
    ComplexGridFunction f = noise(d, 8);
    CHECK(rel(op.apply(f), apply_spectral(dec, piece, f)) <= 1e-10);
  }
}

TEST_CASE("truncated kernels") {
  auto dec = hermite(4, 32);
  const Domain& d = dec->domain();
  Eigen::MatrixXcd K = kernel_matrix(dec, dyadic_piece(make_symbol("coupled"), 1));
  CHECK(truncate_kernel(d, K, 8.0).cwiseAbs().maxCoeff() == 0.0);
  for (double gamma : {3 * d.spacing(), 0.6, 1.3}) {
    Eigen::MatrixXcd Kg = truncate_kernel(d, K, gamma);
    for (std::size_t x = 0; x < d.size(); ++x)
      for (std::size_t y = 0; y < d.size(); ++y) {
        CHECK(std::abs(Kg(x, y)) <= std::abs(K(x, y)));
        if (distance(d.node(x), d.node(y), 1) >= 2 * gamma) CHECK(Kg(x, y) == K(x, y));
      }
  }
  CHECK_THROWS_AS(truncate_kernel(d, K, 2 * d.spacing()), Error);
}

TEST_CASE("commutator examples") {
  auto dec = hermite(4, 32);
  const Domain& d = dec->domain();
  MultiplierOperator T(dec, make_symbol("coupled"));
  ComplexGridFunction f = noise(d, 9);
  GridFunction c = GridFunction::sample(d, [](const Point&) { return 2.5; });
  CHECK(commutator_apply(c, T, f).values().cwiseAbs().maxCoeff() <= 1e-12 * f.values().cwiseAbs().maxCoeff());
  Rng rng(10);
  GridFunction b1 = GridFunction::sample(d, [&](const Point&) { return rng.normal(); });
  GridFunction b2 = GridFunction::sample(d, [&](const Point& x) { return std::sin(x[0]); });
  GridFunction b12(d, b1.values() + b2.values());
  Eigen::VectorXcd lhs = commutator_apply(b12, T, f).values();
  Eigen::VectorXcd rhs = commutator_apply(b1, T, f).values() + commutator_apply(b2, T, f).values();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
  MultiplierOperator I(dec, make_symbol("identity"));
  CHECK(commutator_apply(b1, I, f).values().cwiseAbs().maxCoeff() <= 1e-12 * f.values().cwiseAbs().maxCoeff() * 10);
}

TEST_CASE("non-finite symbols are rejected") {
  auto dec = hermite(4, 32);
  SymbolSpec bad = make_multiplier_symbol("bad", [](double eta) { return cplx(1 / (eta - eta)); });
  CHECK_THROWS_AS(MultiplierOperator(dec, bad), Error);
}

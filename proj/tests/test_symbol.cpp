#include <doctest.h>

#include <cmath>

#include "spm/random.hpp"
#include "spm/smooth.hpp"
#include "spm/symbol.hpp"

using namespace spm;

TEST_CASE("smooth cutoff shape") {
  CHECK(smooth_cutoff(-3) == 1.0);
  CHECK(smooth_cutoff(1) == 1.0);
  CHECK(smooth_cutoff(2) == 0.0);
  CHECK(smooth_cutoff(1.5) == doctest::Approx(0.5).epsilon(1e-14));
  double prev = 1;
  for (double t = 1; t <= 2; t += 1e-3) {
    const double v = smooth_cutoff(t);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
}

TEST_CASE("partition values at 0 and 3") {
  PartitionOfUnity pu = make_partition();
  CHECK(pu.psi(0, 0) == 1.0);
  for (int j = 1; j < 8; ++j) CHECK(pu.psi(j, 0) == 0.0);
  CHECK(pu.psi(0, 3) == 0.0);
  CHECK(std::abs(pu.psi(1, 1.5) + pu.psi(2, 3) - 1) <= 1e-12);
  CHECK(std::abs(pu.psi(2, 3) + pu.psi(3, 3) - 1) <= 1e-12);
}

TEST_CASE("partition sums to one on random samples") {
  PartitionOfUnity pu = make_partition();
  Rng rng(1);
  const int J = 10;
  for (int i = 0; i < 20000; ++i) {
    const double eta = rng.uniform(0, std::ldexp(1.0, J - 1));
    CHECK(std::abs(pu.partial_sum(J, eta) - 1) <= 1e-10);
  }
}

TEST_CASE("dyadic pieces reproduce the symbol and respect their supports") {
  Rng rng(2);
  const int J = 8;
  for (const std::string& id : symbol_catalog()) {
    SymbolSpec s = make_symbol(id);
    auto pieces = dyadic_pieces(s, J);
    CHECK(pieces.size() == static_cast<std::size_t>(J + 1));
    for (int t = 0; t < 500; ++t) {
      Point x{rng.uniform(-3, 3), rng.uniform(-3, 3), 0};
      const double eta = rng.uniform(0, std::ldexp(1.0, J - 1));
      cplx sum = 0;
      for (const auto& p : pieces) sum += p(x, 2, eta);
      CHECK(std::abs(sum - s(x, 2, eta)) <= 1e-10);
      for (int j = 2; j <= J; ++j)
        if (eta <= std::ldexp(1.0, j - 2) || eta >= std::ldexp(1.0, j)) CHECK(pieces[j](x, 2, eta) == cplx(0));
    }
  }
  PartitionOfUnity pu;
  SymbolSpec one = make_symbol("identity");
  for (int j = 0; j < 6; ++j)
    for (double eta : {0.0, 0.3, 1.0, 2.2, 7.5, 20.0}) CHECK(dyadic_piece(one, j)({0, 0, 0}, 1, eta).real() == pu.psi(j, eta));
}

TEST_CASE("pieces_needed covers the range") {
  PartitionOfUnity pu;
  for (double eta_max : {0.5, 1.0, 3.0, 40.0, 1000.0}) {
    const int J = pieces_needed(eta_max);
    CHECK(std::ldexp(1.0, J - 1) >= eta_max);
    CHECK(pu.partial_sum(J, eta_max) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("unknown symbol id raises a config error naming it") {
  try {
    make_symbol("wavelet");
    FAIL("expected Config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("wavelet") != std::string::npos);
  }
  CHECK_THROWS_AS(dyadic_pieces(make_symbol("identity"), -1), Error);
}

TEST_CASE("seminorms of the identity") {
  std::vector<Point> xs{{0, 0, 0}, {0.5, 0, 0}, {-1, 0, 0}};
  std::vector<double> etas;
  for (int i = 0; i <= 50; ++i) etas.push_back(0.2 * i);
  auto table = class_seminorms(make_symbol("identity"), 2, 2, 1, xs, etas);
  for (const auto& e : table) {
    if (e.l == 0 && e.alpha[0] == 0)
      CHECK(e.value == doctest::Approx(1.0));
    else
      CHECK(e.value <= 1e-6);
  }
}

TEST_CASE("(0,0) seminorm of eta^2/(1+eta^2) tends to one") {
  SymbolSpec s = make_symbol("multiplier");
  std::vector<Point> xs{{0, 0, 0}};
  double prev = 0;
  for (double top : {10.0, 100.0, 1000.0}) {
    std::vector<double> etas;
    for (int i = 0; i <= 200; ++i) etas.push_back(top * i / 200);
    auto table = class_seminorms(s, 0, 0, 1, xs, etas);
    REQUIRE(!table.empty());
    CHECK(table[0].value >= prev);
    prev = table[0].value;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("catalog seminorms are stable under step halving") {
  std::vector<Point> xs{{0, 0, 0}, {0.4, 0, 0}, {-0.9, 0, 0}, {1.7, 0, 0}};
  std::vector<double> etas;
  for (int i = 0; i <= 80; ++i) etas.push_back(0.25 * i);
  for (const std::string& id : symbol_catalog()) {
    auto table = class_seminorms(make_symbol(id), 2, 1, 1, xs, etas);
    for (const auto& e : table) CHECK_MESSAGE(!e.unstable, id << " l=" << e.l << " a=" << e.alpha[0]);
  }
}

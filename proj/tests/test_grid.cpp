#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "spm/grid.hpp"
#include "spm/random.hpp"

using namespace spm;

TEST_CASE("integrate: constant over the box and an aligned cube") {
  Domain d(1, 1.0, 16);
  GridFunction one = GridFunction::sample(d, [](const Point&) { return 1.0; });
  CHECK(integrate(one) == 2.0);
  // cells of width 1/8; [0, 0.5] is four whole cells
  CHECK(integrate(one, Cube{{0.25, 0, 0}, 0.5}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("integrate: x^2 on [-1,1]") {
  Domain d(1, 1.0, 1024);
  GridFunction f = GridFunction::sample(d, [](const Point& x) { return x[0] * x[0]; });
  CHECK(std::abs(integrate(f) - 2.0 / 3.0) <= 1e-5);
}

TEST_CASE("lp_norm_weighted examples") {
  Domain d(1, 1.0, 64);
  GridFunction one = GridFunction::sample(d, [](const Point&) { return 1.0; });
  for (double p : {1.0, 1.5, 2.0, 3.0}) CHECK(lp_norm_weighted(one, p, one) == doctest::Approx(std::pow(2.0, 1 / p)));
  CHECK(lp_norm_weighted(GridFunction(d), 2.0, one) == 0.0);

  Domain e(1, 1.0, 1024);
  GridFunction f = GridFunction::sample(e, [](const Point& x) { return x[0]; });
  GridFunction w = GridFunction::sample(e, [](const Point& x) { return 1 + x[0] * x[0]; });
  CHECK(std::abs(lp_norm_weighted(f, 2.0, w) - std::sqrt(2.0 / 3 + 2.0 / 5)) <= 1e-4);
}

TEST_CASE("cube_average examples") {
  Domain d(1, 1.0, 1024);
  GridFunction c = GridFunction::sample(d, [](const Point&) { return 3.5; });
  Cube q{{0.25, 0, 0}, 0.5};
  CHECK(cube_average(c, q) == doctest::Approx(3.5));
  GridFunction left = GridFunction::sample(d, [](const Point& x) { return x[0] < 0.25 ? 1.0 : 0.0; });
  CHECK(cube_average(left, q) == doctest::Approx(0.5));
  const double r = 0.5;
  GridFunction a = GridFunction::sample(d, [](const Point& x) { return std::abs(x[0]); });
  CHECK(std::abs(cube_average(a, Cube{{0, 0, 0}, 2 * r}) - r / 2) <= 1e-4);
}

TEST_CASE("PrefixSum matches direct sums on random boxes") {
  for (int n : {1, 2, 3}) {
    Domain d(n, 1.0, n == 3 ? 8 : 16);
    Rng rng(17 + n);
    GridFunction f = GridFunction::sample(d, [&](const Point&) { return rng.normal(); });
    PrefixSum ps(f);
    for (int t = 0; t < 50; ++t) {
      CellBox box;
      for (int a = 0; a < n; ++a) {
        int lo = static_cast<int>(rng.index(d.points()));
        int hi = lo + 1 + static_cast<int>(rng.index(d.points() - lo));
        box.lo[a] = lo;
        box.hi[a] = hi;
      }
      double direct = 0;
      for_each_cell(box, n, [&](const Index3& idx) { direct += f[d.flatten(idx)]; });
      CHECK(ps.sum(box) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("translate: zero, whole cell, smooth bound") {
  Domain d(1, 1.0, 64);
  const double h = d.spacing();
  Rng rng(3);
  GridFunction f = GridFunction::sample(d, [&](const Point&) { return rng.normal(); });
  GridFunction g = translate(f, {0, 0, 0});
  CHECK((g.values() - f.values()).cwiseAbs().maxCoeff() == 0.0);

  GridFunction s = translate(f, {h, 0, 0});
  for (int i = 0; i + 1 < d.points(); ++i) CHECK(s[i] == doctest::Approx(f[i + 1]).epsilon(1e-13));
  CHECK(s[d.points() - 1] == 0.0);

  Domain fine(1, 4.0, 1024);
  auto bump = [](double x) { return std::exp(-x * x); };
  GridFunction b = GridFunction::sample(fine, [&](const Point& x) { return bump(x[0]); });
  GridFunction db = GridFunction::sample(fine, [&](const Point& x) { return -2 * x[0] * bump(x[0]); });
  GridFunction one = GridFunction::sample(fine, [](const Point&) { return 1.0; });
  for (double t : {0.01, 0.037, 0.1}) {
    GridFunction bt = translate(b, {t, 0, 0});
    GridFunction diff(fine, bt.values() - b.values());
    CHECK(lp_norm_weighted(diff, 2, one) <= 1.1 * lp_norm_weighted(db, 2, one) * t);
  }
}

TEST_CASE("translate in 2D by whole cells shifts indices") {
  Domain d(2, 1.0, 8);
  Rng rng(5);
  GridFunction f = GridFunction::sample(d, [&](const Point&) { return rng.normal(); });
  const double h = d.spacing();
  GridFunction g = translate(f, {h, -2 * h, 0});
  for (std::size_t k = 0; k < d.size(); ++k) {
    Index3 idx = d.unflatten(k);
    Index3 src{idx[0] + 1, idx[1] - 2, 0};
    const bool inside = src[0] < 8 && src[1] >= 0;
    CHECK(g[k] == doctest::Approx(inside ? f[d.flatten(src)] : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("binary and csv round trips") {
  Domain d(2, 1.5, 8);
  Rng rng(9);
  GridFunction f = GridFunction::sample(d, [&](const Point&) { return rng.normal(); });
  auto dir = std::filesystem::temp_directory_path() / "spm_grid_io";
  std::filesystem::create_directories(dir);
  io::write_binary(dir / "f.bin", f);
  GridFunction b = io::read_binary(dir / "f.bin");
  CHECK(b.domain() == d);
  CHECK((b.values() - f.values()).cwiseAbs().maxCoeff() == 0.0);
  io::write_csv(dir / "f.csv", f);
  GridFunction c = io::read_csv(dir / "f.csv");
  CHECK(c.domain() == d);
  CHECK((c.values() - f.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(io::read_binary(dir / "missing.bin"), Error);
}

TEST_CASE("grid function rejects size mismatch and non-finite values") {
  Domain d(1, 1.0, 8);
  CHECK_THROWS_AS(GridFunction(d, Eigen::VectorXd::Zero(7)), Error);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(8);
  v[1] = std::nan("");
  CHECK_THROWS_AS(GridFunction(d, v), Error);
}

#include "spm/potential.hpp"

#include <algorithm>
#include <exception>
#include <numbers>
#include <numeric>
#include <sstream>

#include "spm/random.hpp"

namespace spm {

PotentialSpec PotentialSpec::make_constant(double c) {
  if (!(c > 0)) fail(ErrorKind::InvalidArgument, "constant potential must be positive");
  PotentialSpec s;
  s.kind = Kind::Constant;
  s.id = "constant";
  s.constant = c;
  return s;
}

PotentialSpec PotentialSpec::make_power(double alpha) {
  if (!(alpha > 0)) fail(ErrorKind::InvalidArgument, "power exponent must be positive");
  PotentialSpec s;
  s.kind = Kind::Power;
  s.id = "power";
  s.alpha = alpha;
  return s;
}

PotentialSpec PotentialSpec::make_hermite() {
  PotentialSpec s = make_power(2);
  s.id = "hermite";
  return s;
}

PotentialSpec PotentialSpec::make_lipschitz_slab(double alpha, const Point& slope, double offset) {
  if (!(alpha > 0)) fail(ErrorKind::InvalidArgument, "slab exponent must be positive");
  PotentialSpec s;
  s.kind = Kind::LipschitzSlab;
  s.id = "lipschitz_slab";
  s.alpha = alpha;
  s.slope = slope;
  s.offset = offset;
  return s;
}

std::string PotentialSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << id;
  switch (kind) {
    case Kind::Constant: os << "(c=" << constant << ")"; break;
    case Kind::Power: os << "(alpha=" << alpha << ")"; break;
    case Kind::LipschitzSlab:
      os << "(alpha=" << alpha << ",slope=" << slope[0] << ":" << slope[1] << ":" << slope[2]
         << ",offset=" << offset << ")";
      break;
  }
  return os.str();
}

namespace {

double power_of(double r, double alpha) {
  if (alpha == 2) return r * r;
  if (alpha == 1) return r;
  return std::pow(r, alpha);
}

}  // namespace

double eval_potential(const PotentialSpec& spec, const Point& x, int n) {
  switch (spec.kind) {
    case PotentialSpec::Kind::Constant: return spec.constant;
    case PotentialSpec::Kind::Power: {
      if (spec.alpha == 2) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += x[i] * x[i];
        return s;
      }
      return power_of(norm(x, n), spec.alpha);
    }
    case PotentialSpec::Kind::LipschitzSlab: {
      double phi = spec.offset;
      for (int i = 0; i + 1 < n; ++i) phi += spec.slope[i] * x[i];
      return power_of(std::abs(x[n - 1] - phi), spec.alpha);
    }
  }
  return 0;
}

GridFunction sample_potential(const Domain& d, const PotentialSpec& spec) {
  return GridFunction::sample(d, [&](const Point& x) { return eval_potential(spec, x, d.dim()); });
}

BallQuadrature::BallQuadrature(int n, int radial, int polar, int azimuth) : n_(n), radial_(gauss_legendre(radial)) {
  if (n < 1 || n > 3) fail(ErrorKind::InvalidArgument, "ball quadrature needs n in 1..3");
  const double pi = std::numbers::pi;
  if (n == 1) {
    directions_ = {{Point{-1, 0, 0}, 1.0}, {Point{1, 0, 0}, 1.0}};
  } else if (n == 2) {
    for (int a = 0; a < azimuth; ++a) {
      const double phi = 2 * pi * (a + 0.5) / azimuth;
      directions_.push_back({Point{std::cos(phi), std::sin(phi), 0}, 2 * pi / azimuth});
    }
  } else {
    const GaussRule pr = gauss_legendre(polar);
    for (int p = 0; p < polar; ++p) {
      const double ct = pr.nodes[p], st = std::sqrt(1 - ct * ct);
      for (int a = 0; a < azimuth; ++a) {
        const double phi = 2 * pi * (a + 0.5) / azimuth;
        directions_.push_back({Point{st * std::cos(phi), st * std::sin(phi), ct}, pr.weights[p] * 2 * pi / azimuth});
      }
    }
  }
}

double BallQuadrature::volume(const Point& c, double r, double box_half_width) const {
  return integrate([](const Point&) { return 1.0; }, c, r, box_half_width);
}

double rh_constant(const PotentialSpec& spec, double q, const std::vector<Ball>& balls, int n,
                   double box_half_width) {
  if (!(q > 1) || !(q < spec.rh_q_max)) fail(ErrorKind::InvalidArgument, "q outside the declared reverse-Hoelder range");
  const BallQuadrature quad(n, 24, 16, 32);
  double best = 0;
  for (const Ball& b : balls) {
    const double vol = quad.volume(b.center, b.radius, box_half_width);
    if (!(vol > 0)) fail(ErrorKind::DegenerateBall, "ball misses the domain");
    const double m1 = quad.integrate([&](const Point& x) { return eval_potential(spec, x, n); }, b.center, b.radius,
                                     box_half_width) / vol;
    if (!(m1 > 0)) fail(ErrorKind::DegenerateBall, "potential average vanishes on a ball");
    const double mq = quad.integrate([&](const Point& x) { return std::pow(eval_potential(spec, x, n), q); }, b.center,
                                     b.radius, box_half_width) / vol;
    best = std::max(best, std::pow(mq, 1 / q) / m1);
  }
  return best;
}

CriticalRadius critical_radius(const PotentialSpec& spec, const Point& x, const Domain& d,
                               const CriticalRadiusOptions& opts) {
  const BallQuadrature quad(d.dim(), opts.radial, opts.polar, opts.azimuth);
  return critical_radius(spec, x, d, quad, opts);
}

CriticalRadius critical_radius(const PotentialSpec& spec, const Point& x, const Domain& d,
                               const BallQuadrature& quad, const CriticalRadiusOptions& opts) {
  const int n = d.dim();
  const double L = d.half_width();
  auto g = [&](double r) {
    const double mass = quad.integrate([&](const Point& y) { return eval_potential(spec, y, n); }, x, r, L);
    return std::pow(r, 2.0 - n) * mass;
  };
  const double r_lo = d.spacing(), r_hi = 4 * L;
  const int K = std::max(2, opts.scan_points);
  auto radius = [&](int k) { return r_lo * std::pow(r_hi / r_lo, double(k) / (K - 1)); };

  if (g(r_lo) > 1) fail(ErrorKind::ResolutionTooCoarse, "g(h) > 1: critical radius below the grid spacing");
  double g_next = g(r_hi);
  if (g_next <= 1) return {r_hi, true};
  // top-down: the last down-crossing bracket below 4L
  int k = K - 2;
  for (; k > 0; --k) {
    const double gk = g(radius(k));
    if (gk <= 1) break;
    g_next = gk;
  }
  double a = radius(k), b = radius(k + 1);
  while (b - a > opts.relative_tolerance * a) {
    const double m = 0.5 * (a + b);
    if (g(m) <= 1)
      a = m;
    else
      b = m;
  }
  return {0.5 * (a + b), false};
}

CriticalFunctionTable::CriticalFunctionTable(PotentialSpec spec, GridFunction rho, std::size_t flagged_nodes)
    : spec_(std::move(spec)), rho_(std::move(rho)), flagged_(flagged_nodes) {
  if (!(rho_.values().minCoeff() > 0)) fail(ErrorKind::InvalidArgument, "critical function must be positive");
}

double CriticalFunctionTable::at(const Point& x) const {
  const Domain& d = rho_.domain();
  const int n = d.dim();
  Index3 base{0, 0, 0};
  std::array<double, 3> frac{0, 0, 0};
  for (int i = 0; i < n; ++i) {
    double u = (x[i] + d.half_width()) / d.spacing() - 0.5;
    u = std::clamp(u, 0.0, double(d.points() - 1));
    base[i] = std::min(d.points() - 2, static_cast<int>(std::floor(u)));
    frac[i] = u - base[i];
  }
  double acc = 0;
  for (int c = 0; c < (1 << n); ++c) {
    double w = 1;
    Index3 j{0, 0, 0};
    for (int i = 0; i < n; ++i) {
      const int bit = (c >> i) & 1;
      w *= bit ? frac[i] : 1 - frac[i];
      j[i] = base[i] + bit;
    }
    if (w != 0) acc += w * rho_[d.flatten(j)];
  }
  return acc;
}

CriticalFunctionTable build_critical_table(const Domain& d, const PotentialSpec& spec,
                                           const CriticalRadiusOptions& opts) {
  const BallQuadrature quad(d.dim(), opts.radial, opts.polar, opts.azimuth);
  Eigen::VectorXd rho(static_cast<Eigen::Index>(d.size()));
  std::vector<char> flagged(d.size(), 0);
  std::exception_ptr error;
  const long total = static_cast<long>(d.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < total; ++i) {
    try {
      const CriticalRadius cr = critical_radius(spec, d.node(static_cast<std::size_t>(i)), d, quad, opts);
      rho[i] = cr.rho;
      flagged[static_cast<std::size_t>(i)] = cr.flagged;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  const auto count = static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), 1));
  return CriticalFunctionTable(spec, GridFunction(d, std::move(rho)), count);
}

double psi_theta(const Point& center, double radius, double theta, const CriticalFunctionTable& table) {
  if (theta == 0) return 1;
  return std::pow(1 + radius / table.at(center), theta);
}

double psi_theta(const Cube& q, double theta, const CriticalFunctionTable& table) {
  return psi_theta(q.center, q.side, theta, table);
}

double psi_theta(const Ball& b, double theta, const CriticalFunctionTable& table) {
  return psi_theta(b.center, b.radius, theta, table);
}

std::vector<std::pair<std::size_t, std::size_t>> sample_node_pairs(const Domain& d, std::size_t count,
                                                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(count);
  while (pairs.size() < count) {
    const std::size_t x = rng.index(d.size()), y = rng.index(d.size());
    if (x != y) pairs.emplace_back(x, y);
  }
  return pairs;
}

ShenConstants fit_shen_constants(const CriticalFunctionTable& table,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  if (pairs.size() < 100) fail(ErrorKind::InvalidArgument, "Shen fit needs at least 100 pairs");
  const Domain& d = table.domain();
  const int n = d.dim();
  // (1 + |x-y|/rho(x), rho(y)/rho(x)) for both orientations
  std::vector<std::pair<double, double>> samples;
  samples.reserve(2 * pairs.size());
  for (const auto& [i, j] : pairs) {
    const double dist = distance(d.node(i), d.node(j), n);
    const double ri = table.rho()[i], rj = table.rho()[j];
    samples.emplace_back(1 + dist / ri, rj / ri);
    samples.emplace_back(1 + dist / rj, ri / rj);
  }
  auto required = [&](double l0) {
    double req = 1;
    const double up = l0 / (l0 + 1);
    for (const auto& [u, ratio] : samples) {
      req = std::max(req, std::pow(u, -l0) / ratio);
      req = std::max(req, ratio / std::pow(u, up));
    }
    return req;
  };
  for (int a = 1; a <= 32; ++a) {
    const double l0 = 0.25 * a;
    const double req = required(l0);
    if (req > 16 * (1 + 1e-12)) continue;
    int k = std::max(1, static_cast<int>(std::ceil((req - 1) / 0.05 - 1e-9)));
    ShenConstants out;
    out.l0 = l0;
    out.C0 = 1 + 0.05 * k;
    out.required_C0 = req;
    out.pairs_checked = pairs.size();
    const double up = l0 / (l0 + 1);
    for (const auto& [u, ratio] : samples)
      if (ratio < std::pow(u, -l0) / out.C0 || ratio > out.C0 * std::pow(u, up)) ++out.violations;
    return out;
  }
  fail(ErrorKind::FitFailure, "no lattice point (l0, C0) satisfies the comparison bounds");
}

CriticalCovering critical_covering(const CriticalFunctionTable& table) {
  const Domain& d = table.domain();
  const int n = d.dim();
  const double h = d.spacing();
  auto ball_cells = [&](const Ball& b) {
    CellBox box;
    for (int i = 0; i < n; ++i) {
      box.lo[i] = std::max(0, static_cast<int>(std::floor((b.center[i] - b.radius + d.half_width()) / h - 0.5)));
      box.hi[i] = std::min(d.points(), static_cast<int>(std::ceil((b.center[i] + b.radius + d.half_width()) / h - 0.5)) + 1);
    }
    return box;
  };
  auto visit_ball = [&](const Ball& b, auto&& f) {
    for_each_cell(ball_cells(b), n, [&](const Index3& idx) {
      const std::size_t flat = d.flatten(idx);
      if (distance(d.node(flat), b.center, n) <= b.radius * (1 + 1e-12)) f(flat);
    });
  };

  CriticalCovering cov;
  std::vector<char> covered(d.size(), 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (covered[i]) continue;
    const Ball b{d.node(i), table.rho()[i]};
    cov.balls.push_back(b);
    visit_ball(b, [&](std::size_t j) { covered[j] = 1; });
  }
  cov.coverage_fraction = double(std::count(covered.begin(), covered.end(), 1)) / double(d.size());

  std::vector<double> lx, ly;
  for (double kappa : cov.kappas) {
    std::vector<std::size_t> count(d.size(), 0);
    for (const Ball& b : cov.balls) visit_ball(Ball{b.center, kappa * b.radius}, [&](std::size_t j) { ++count[j]; });
    cov.max_overlap.push_back(*std::max_element(count.begin(), count.end()));
    lx.push_back(std::log(kappa));
    ly.push_back(std::log(double(cov.max_overlap.back())));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  cov.fitted_N = std::max(0.0, sxx > 0 ? sxy / sxx : 0.0);
  for (std::size_t k = 0; k < lx.size(); ++k)
    cov.fitted_C = std::max(cov.fitted_C, cov.max_overlap[k] / std::pow(cov.kappas[k], cov.fitted_N));
  return cov;
}

}  // namespace spm

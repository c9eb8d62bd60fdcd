#include "spm/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "spm/dyadic.hpp"
#include "spm/random.hpp"

namespace spm {

WeightSpec WeightSpec::unit(const Domain& d) {
  return {Kind::Unit, "unit", 0, GridFunction::sample(d, [](const Point&) { return 1.0; })};
}

WeightSpec WeightSpec::power(const Domain& d, double a) {
  const int n = d.dim();
  return {Kind::Power, "power", a, GridFunction::sample(d, [&](const Point& x) { return std::pow(norm(x, n), a); })};
}

WeightSpec WeightSpec::shifted_power(const Domain& d, double a) {
  const int n = d.dim();
  return {Kind::ShiftedPower, "shifted_power", a,
          GridFunction::sample(d, [&](const Point& x) { return std::pow(1 + norm(x, n), a); })};
}

WeightSpec WeightSpec::gridded(GridFunction w, std::string id) {
  if (w.values().minCoeff() <= 0) fail(ErrorKind::InvalidWeight, "weight must be strictly positive");
  return {Kind::Gridded, std::move(id), 0, std::move(w)};
}

std::string WeightSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << id;
  if (kind == Kind::Power || kind == Kind::ShiftedPower) os << "(a=" << a << ")";
  return os.str();
}

CubeFamily build_cube_family(const Domain& d, std::size_t random_count, std::uint64_t seed, int systems) {
  CubeFamily fam;
  fam.seed = seed;
  const int n = d.dim();
  int depth = 0;
  while ((d.points() >> (depth + 1)) >= 2 && d.points() % (1 << (depth + 1)) == 0) ++depth;
  const auto all = build_systems(d, depth);
  const std::size_t used = systems > 0 ? std::min<std::size_t>(systems, all.size()) : all.size();
  for (std::size_t s = 0; s < used; ++s)
    for (const auto& level : all[s].levels)
      for (const CellBox& q : level)
        if (q.extent(0) >= 2) fam.cubes.push_back(q);
  Rng rng(seed);
  for (std::size_t i = 0; i < random_count; ++i) {
    const int side = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(d.points())));
    CellBox q;
    for (int a = 0; a < n; ++a) {
      q.lo[a] = static_cast<int>(rng.index(static_cast<std::size_t>(d.points() - side + 1)));
      q.hi[a] = q.lo[a] + side;
    }
    fam.cubes.push_back(q);
  }
  return fam;
}

CubeFamily centered_cube_family(const Domain& d) {
  CubeFamily fam;
  const int M = d.points();
  for (int k = 1; 2 * k <= M; ++k) {
    CellBox q;
    for (int a = 0; a < d.dim(); ++a) {
      q.lo[a] = M / 2 - k;
      q.hi[a] = M / 2 + k + (M % 2);
    }
    fam.cubes.push_back(q);
  }
  return fam;
}

CubeFamily prefix_family(const CubeFamily& family, std::size_t count) {
  CubeFamily out;
  out.seed = family.seed;
  out.cubes.assign(family.cubes.begin(), family.cubes.begin() + std::min(count, family.size()));
  return out;
}

GridFunction dual_weight(const GridFunction& w, double p) {
  if (!(p > 1)) fail(ErrorKind::InvalidArgument, "dual weight needs p > 1");
  if (w.values().minCoeff() <= 0) fail(ErrorKind::InvalidWeight, "weight must be strictly positive");
  const double e = -1 / (p - 1);
  return GridFunction(w.domain(), w.values().array().pow(e).matrix());
}

std::vector<double> ap_products(const GridFunction& w, double p, double theta, const CriticalFunctionTable& table,
                                const CubeFamily& family) {
  const Domain& d = w.domain();
  const PrefixSum sw(w);
  const double e = -1 / (p - 1);
  Eigen::VectorXd nu = w.values().array().pow(e).matrix();
  for (Eigen::Index i = 0; i < nu.size(); ++i)
    if (!std::isfinite(nu[i])) nu[i] = std::numeric_limits<double>::max();
  const PrefixSum snu(GridFunction(d, nu));
  std::vector<double> out(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const CellBox& q = family.cubes[i];
    const double psi = psi_theta(to_cube(d, q), theta, table);
    out[i] = sw.average(q) * std::pow(snu.average(q), p - 1) / std::pow(psi, p);
  }
  return out;
}

ApEstimate ap_characteristic(const GridFunction& w, double p, double theta, const CriticalFunctionTable& table,
                             const CubeFamily& family) {
  if (!(p > 1)) fail(ErrorKind::InvalidArgument, "A_p needs p > 1");
  if (w.values().minCoeff() <= 0) fail(ErrorKind::InvalidWeight, "weight must be strictly positive");
  if (family.cubes.empty()) fail(ErrorKind::InvalidArgument, "empty cube family");
  const std::vector<double> prod = ap_products(w, p, theta, table, family);
  ApEstimate est;
  const std::size_t half = std::max<std::size_t>(1, prod.size() / 2);
  for (std::size_t i = 0; i < prod.size(); ++i) {
    if (!std::isfinite(prod[i])) {
      est.outside_class = true;
      continue;
    }
    // ties keep the lower cube id
    if (prod[i] > est.value) {
      est.value = prod[i];
      est.argmax = i;
    }
    if (i < half) est.half_family_value = std::max(est.half_family_value, prod[i]);
  }
  if (est.outside_class) est.value = std::numeric_limits<double>::infinity();
  return est;
}

double reverse_holder_exponent(double p, double theta, int n, double characteristic) {
  return 1 + 1 / (std::pow(2.0, 2 * p * (1 + theta) + n + 1) * characteristic);
}

ReverseHolderFit reverse_holder(const GridFunction& w, double p, double theta, double characteristic,
                                const CriticalFunctionTable& table, const CubeFamily& family) {
  const Domain& d = w.domain();
  ReverseHolderFit fit;
  fit.r = reverse_holder_exponent(p, theta, d.dim(), characteristic);
  const GridFunction wr(d, w.values().array().pow(fit.r).matrix());
  const PrefixSum sw(w), swr(wr);
  std::vector<double> ratio(family.size()), side_over_rho(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const CellBox& q = family.cubes[i];
    const Cube c = to_cube(d, q);
    const double top = std::pow(swr.average(q), 1 / fit.r);
    if (!std::isfinite(top)) {
      fit.overflow = true;
      fit.flagged_cube = i;
      ratio[i] = 0;
    } else {
      ratio[i] = top / sw.average(q);
    }
    side_over_rho[i] = c.side / table.at(c.center);
  }
  auto C_of = [&](double N0) {
    double C = 0;
    for (std::size_t i = 0; i < ratio.size(); ++i) C = std::max(C, ratio[i] / std::pow(1 + side_over_rho[i], N0));
    return C;
  };
  // Jensen gives ratio >= 1 and the ratio tends to 1 on shrinking cubes, so the
  // N0 -> infinity limit is floored at 1 (on a grid C_of itself decays to 0)
  fit.C_limit = std::max(1.0, C_of(8));
  for (int k = 0; k <= 16; ++k) {
    const double N0 = 0.5 * k;
    const double C = C_of(N0);
    if (C <= 2 * fit.C_limit) {
      fit.N0 = N0;
      fit.C = C;
      break;
    }
  }
  return fit;
}

double bmo_theta_norm(const GridFunction& b, double theta, const CriticalFunctionTable& table,
                      const CubeFamily& family) {
  const Domain& d = b.domain();
  const int n = d.dim();
  const PrefixSum sb(b);
  double best = 0;
  for (const CellBox& q : family.cubes) {
    const double mean = sb.average(q);
    double osc = 0;
    for_each_cell(q, n, [&](const Index3& idx) { osc += std::abs(b[d.flatten(idx)] - mean); });
    osc /= static_cast<double>(q.count(n));
    best = std::max(best, osc / psi_theta(to_cube(d, q), theta, table));
  }
  return best;
}

double YoungFunction::operator()(double t) const {
  switch (kind) {
    case Kind::Power: return std::pow(t, p);
    case Kind::LlogL: return t * std::log(std::numbers::e + t);
    case Kind::ExpL: return std::expm1(t);
  }
  return 0;
}

std::string YoungFunction::id() const {
  switch (kind) {
    case Kind::Power: {
      std::ostringstream os;
      os << "power(" << p << ")";
      return os.str();
    }
    case Kind::LlogL: return "LlogL";
    case Kind::ExpL: return "expL";
  }
  return "?";
}

double luxemburg_norm(std::span<const double> values, const YoungFunction& phi) {
  if (values.empty()) fail(ErrorKind::EmptyRegion, "Luxemburg norm over an empty set");
  double top = 0;
  for (double v : values) top = std::max(top, std::abs(v));
  if (top == 0) return 0;
  auto mean_phi = [&](double lambda) {
    double s = 0;
    for (double v : values) s += phi(std::abs(v) / lambda);
    return s / static_cast<double>(values.size());
  };
  double lo = top, hi = top;
  while (mean_phi(hi) > 1) {
    hi *= 2;
    if (hi > 1e300) fail(ErrorKind::DivergentNorm, "no finite Luxemburg scale");
  }
  while (mean_phi(lo) <= 1 && lo > 1e-300) lo *= 0.5;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mean_phi(mid) <= 1)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double luxemburg_norm(const GridFunction& f, const CellBox& Q, const YoungFunction& phi) {
  const Domain& d = f.domain();
  std::vector<double> vals;
  vals.reserve(Q.count(d.dim()));
  for_each_cell(Q, d.dim(), [&](const Index3& idx) { vals.push_back(f[d.flatten(idx)]); });
  return luxemburg_norm(vals, phi);
}

}  // namespace spm

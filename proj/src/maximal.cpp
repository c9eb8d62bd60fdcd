#include "spm/maximal.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spm/random.hpp"

namespace spm {

std::vector<int> catalog_sides(const Domain& d) {
  std::vector<int> sides;
  for (int s = 1; s <= d.points(); s *= 2) sides.push_back(s);
  return sides;
}

namespace {

/// For each side s, evaluate value(Q) at every position and spread the max to the
/// nodes each cube covers (separable sliding-window max).
template <typename F>
GridFunction catalog_sup(const Domain& d, F&& value) {
  const int n = d.dim(), M = d.points();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d.size()), -1.0);
  for (int s : catalog_sides(d)) {
    const int P = M - s + 1;
    // dims per axis of the working array: first all P, then replaced by M axis by axis
    std::array<int, 3> dims{1, 1, 1};
    for (int a = 0; a < n; ++a) dims[a] = P;
    std::vector<double> A(static_cast<std::size_t>(std::pow(P, n)));
    {
      CellBox pos;
      pos.lo = {0, 0, 0};
      pos.hi = {n > 0 ? P : 1, n > 1 ? P : 1, n > 2 ? P : 1};
      std::size_t k = 0;
      for_each_cell(pos, n, [&](const Index3& p) {
        CellBox q;
        for (int a = 0; a < n; ++a) {
          q.lo[a] = p[a];
          q.hi[a] = p[a] + s;
        }
        A[k++] = value(q);
      });
    }
    for (int axis = 0; axis < n; ++axis) {
      std::array<int, 3> nd = dims;
      nd[axis] = M;
      std::vector<double> B(static_cast<std::size_t>(nd[0]) * nd[1] * nd[2], -1.0);
      // strides for row-major with axis 0 slowest over the first n dims
      auto stride = [&](const std::array<int, 3>& dm, int ax) {
        std::size_t st = 1;
        for (int b = n - 1; b > ax; --b) st *= static_cast<std::size_t>(dm[b]);
        return st;
      };
      const std::size_t sa = stride(dims, axis), sb = stride(nd, axis);
      std::size_t outer = 1, inner = sa;
      for (int b = 0; b < axis; ++b) outer *= static_cast<std::size_t>(dims[b]);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t baseA = o * dims[axis] * sa + in, baseB = o * nd[axis] * sb + in;
          for (int x = 0; x < M; ++x) {
            double m = -1;
            for (int p = std::max(0, x - s + 1); p <= std::min(x, P - 1); ++p) m = std::max(m, A[baseA + p * sa]);
            B[baseB + x * sb] = m;
          }
        }
      A = std::move(B);
      dims = nd;
    }
    for (std::size_t i = 0; i < d.size(); ++i)
      out[static_cast<Eigen::Index>(i)] = std::max(out[static_cast<Eigen::Index>(i)], A[i]);
  }
  return GridFunction(d, std::move(out));
}

}  // namespace

GridFunction local_maximal(const GridFunction& f, double r, double theta, const CriticalFunctionTable& table) {
  if (!(r >= 1)) fail(ErrorKind::InvalidArgument, "r must be at least 1");
  const Domain& d = f.domain();
  const PrefixSum s(GridFunction(d, f.values().cwiseAbs().array().pow(r).matrix()));
  return catalog_sup(d, [&](const CellBox& q) {
    const double avg = std::pow(s.average(q), 1 / r);
    return theta == 0 ? avg : avg / psi_theta(to_cube(d, q), theta, table);
  });
}

GridFunction local_maximal(const GridFunction& f, double r) {
  if (!(r >= 1)) fail(ErrorKind::InvalidArgument, "r must be at least 1");
  const Domain& d = f.domain();
  const PrefixSum s(GridFunction(d, f.values().cwiseAbs().array().pow(r).matrix()));
  return catalog_sup(d, [&](const CellBox& q) { return std::pow(s.average(q), 1 / r); });
}

GridFunction dyadic_weighted_maximal(const GridFunction& f, const GridFunction& w,
                                     const std::vector<DyadicSystem>& systems) {
  const Domain& d = f.domain();
  if (w.values().minCoeff() <= 0) fail(ErrorKind::InvalidWeight, "weight must be strictly positive");
  const int n = d.dim();
  const PrefixSum sw(w);
  const PrefixSum sfw(GridFunction(d, f.values().cwiseAbs().cwiseProduct(w.values())));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.size()));
  for (const DyadicSystem& sys : systems)
    for (const auto& level : sys.levels)
      for (const CellBox& q : level) {
        const double v = sfw.sum(q) / sw.sum(q);
        for_each_cell(q, n, [&](const Index3& idx) {
          double& o = out[static_cast<Eigen::Index>(d.flatten(idx))];
          o = std::max(o, v);
        });
      }
  return GridFunction(d, std::move(out));
}

GridFunction orlicz_maximal(const GridFunction& f, const YoungFunction& phi, double theta,
                            const CriticalFunctionTable& table) {
  const Domain& d = f.domain();
  return catalog_sup(d, [&](const CellBox& q) {
    const double v = luxemburg_norm(f, q, phi);
    return theta == 0 ? v : v / psi_theta(to_cube(d, q), theta, table);
  });
}

GridFunction sharp_grand_truncation(const LinearOperator& T, const ComplexGridFunction& f, double alpha,
                                    const SharpTruncationOptions& opts) {
  if (!(alpha >= 3)) fail(ErrorKind::InvalidArgument, "alpha must be at least 3");
  const Domain& d = f.domain();
  const int n = d.dim();
  Rng rng(opts.seed);
  return catalog_sup(d, [&](const CellBox& q) {
    const CellBox aq = dilate(d, q, alpha);
    ComplexGridFunction g = f;
    for_each_cell(aq, n, [&](const Index3& idx) { g[d.flatten(idx)] = 0; });
    const ComplexGridFunction Tg = T.apply(g);
    std::vector<cplx> v;
    v.reserve(q.count(n));
    for_each_cell(q, n, [&](const Index3& idx) { v.push_back(Tg[d.flatten(idx)]); });
    double best = 0;
    if (v.size() <= opts.exact_node_cap) {
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) best = std::max(best, std::abs(v[i] - v[j]));
    } else {
      for (std::size_t k = 0; k < opts.subsample; ++k)
        best = std::max(best, std::abs(v[rng.index(v.size())] - v[rng.index(v.size())]));
    }
    return best;
  });
}

}  // namespace spm

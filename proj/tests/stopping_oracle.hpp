#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "spm/dyadic.hpp"

namespace oracle {

using namespace spm;

using Box = std::array<int, 6>;

inline Box key(const CellBox& b) { return {b.lo[0], b.lo[1], b.lo[2], b.hi[0], b.hi[1], b.hi[2]}; }

/// Exhaustive stopping-time construction for a dense node matrix A on a small grid,
/// written directly from the rule: score = max(dyadic maximal |f|^r over strict
/// subcubes, |A(f 1_{alpha P}) - mean_P|) / (avg_{alpha P}|f|^r)^{1/r}, exceed above
/// max(lambda, upper median), children = maximal dyadic cubes inside the exceed set.
struct BruteStopping {
  const Domain& d;
  Eigen::MatrixXcd A;
  Eigen::VectorXcd f;
  double alpha, r, lambda;
  int min_side;
  std::vector<std::pair<Box, std::set<std::size_t>>> out;

  std::vector<std::size_t> nodes(const CellBox& b) const {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < d.size(); ++i) {
      Index3 idx = d.unflatten(i);
      bool in = true;
      for (int a = 0; a < d.dim(); ++a) in = in && idx[a] >= b.lo[a] && idx[a] < b.hi[a];
      if (in) v.push_back(i);
    }
    return v;
  }

  std::vector<std::size_t> dilated_nodes(const CellBox& b) const {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < d.size(); ++i) {
      Index3 idx = d.unflatten(i);
      bool in = true;
      for (int a = 0; a < d.dim(); ++a) {
        const double c = 0.5 * (b.lo[a] + b.hi[a]);
        const double half = 0.5 * (b.hi[a] - b.lo[a]) * alpha;
        in = in && std::abs(idx[a] + 0.5 - c) <= half + 1e-12;
      }
      if (in) v.push_back(i);
    }
    return v;
  }

  double ravg(const std::vector<std::size_t>& v) const {
    double s = 0;
    for (std::size_t i : v) s += std::pow(std::abs(f[i]), r);
    return std::pow(s / static_cast<double>(v.size()), 1 / r);
  }

  /// All dyadic subcubes of P strictly smaller than P.
  std::vector<CellBox> subcubes(const CellBox& P) const {
    std::vector<CellBox> all;
    for (int s = P.extent(0) / 2; s >= min_side; s /= 2) {
      const int per = P.extent(0) / s;
      for (int i = 0; i < per; ++i)
        for (int j = 0; j < (d.dim() > 1 ? per : 1); ++j) {
          CellBox q;
          q.lo[0] = P.lo[0] + i * s;
          q.hi[0] = q.lo[0] + s;
          if (d.dim() > 1) {
            q.lo[1] = P.lo[1] + j * s;
            q.hi[1] = q.lo[1] + s;
          }
          all.push_back(q);
        }
    }
    return all;
  }

  void visit(const CellBox& P) {
    const auto inP = nodes(P);
    std::set<std::size_t> witness(inP.begin(), inP.end());
    const std::size_t slot = out.size();
    out.push_back({key(P), {}});
    std::vector<CellBox> children;
    if (P.extent(0) > min_side) {
      const auto aP = dilated_nodes(P);
      const double ref = ravg(aP);
      if (ref > 0) {
        Eigen::VectorXcd g = Eigen::VectorXcd::Zero(f.size());
        for (std::size_t i : aP) g[i] = f[i];
        const Eigen::VectorXcd Tg = A * g;
        cplx mean = 0;
        for (std::size_t i : inP) mean += Tg[i];
        mean /= static_cast<double>(inP.size());
        std::vector<double> score(d.size(), 0.0);
        for (std::size_t i : inP) score[i] = std::abs(Tg[i] - mean);
        const auto subs = subcubes(P);
        for (const CellBox& q : subs) {
          const auto nq = nodes(q);
          const double a = ravg(nq);
          for (std::size_t i : nq) score[i] = std::max(score[i], a);
        }
        std::vector<double> sorted;
        for (std::size_t i : inP) sorted.push_back(score[i] / ref);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const double thr = std::max(lambda, sorted[inP.size() / 2]);
        auto inside = [&](const CellBox& q) {
          for (std::size_t i : nodes(q))
            if (!(score[i] / ref > thr)) return false;
          return true;
        };
        for (const CellBox& q : subs) {
          if (!inside(q)) continue;
          bool maximal = true;
          for (const CellBox& big : subs)
            if (big.extent(0) > q.extent(0) && big.contains(q, d.dim()) && inside(big)) maximal = false;
          if (maximal) children.push_back(q);
        }
      }
    }
    for (const CellBox& c : children)
      for (std::size_t i : nodes(c)) witness.erase(i);
    out[slot].second = witness;
    for (const CellBox& c : children) visit(c);
  }
};

inline std::vector<std::pair<Box, std::set<std::size_t>>> family_rows(const SparseFamily& fam) {
  std::vector<std::pair<Box, std::set<std::size_t>>> rows;
  for (const auto& q : fam.cubes) rows.push_back({key(q.box), std::set<std::size_t>(q.witness.begin(), q.witness.end())});
  std::sort(rows.begin(), rows.end());
  return rows;
}

inline bool same_family(const SparseFamily& fam, std::vector<std::pair<Box, std::set<std::size_t>>> brute) {
  std::sort(brute.begin(), brute.end());
  return family_rows(fam) == brute;
}

}  // namespace oracle

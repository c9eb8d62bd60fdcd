#include "spm/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

namespace spm {

int DyadicSystem::side_cells(int level) const { return points >> level; }

std::optional<std::size_t> DyadicSystem::index_of(int level, const CellBox& box, int n) const {
  if (level < 0 || level > depth) return std::nullopt;
  const int s = side_cells(level);
  std::size_t flat = 0;
  for (int a = 0; a < n; ++a) {
    if (box.extent(a) != s) return std::nullopt;
    const int rel = box.lo[a] - starts[level][a];
    if (rel < 0 || rel % s != 0 || rel / s >= counts[level][a]) return std::nullopt;
    flat = flat * static_cast<std::size_t>(counts[level][a]) + static_cast<std::size_t>(rel / s);
  }
  return flat;
}

std::size_t DyadicSystem::cube_count() const {
  std::size_t c = 0;
  for (const auto& l : levels) c += l.size();
  return c;
}

int max_dyadic_depth(const Domain& d) {
  int depth = 0;
  while (d.points() % (1 << (depth + 1)) == 0 && (1 << (depth + 1)) <= d.points()) ++depth;
  return depth;
}

std::vector<DyadicSystem> build_systems(const Domain& d, int depth) {
  const int n = d.dim(), M = d.points();
  if (depth < 0 || (1 << depth) > M || M % (1 << depth) != 0)
    fail(ErrorKind::ResolutionTooCoarse, "dyadic depth too deep for the grid");
  int total = 1;
  for (int a = 0; a < n; ++a) total *= 3;
  std::vector<DyadicSystem> out;
  for (int id = 0; id < total; ++id) {
    DyadicSystem sys;
    sys.id = id;
    sys.points = M;
    sys.depth = depth;
    int code = id;
    for (int a = 0; a < n; ++a) {
      const int t = code % 3;
      code /= 3;
      sys.offset[a] = static_cast<int>(std::lround(t * M / 3.0));
    }
    for (int level = 0; level <= depth; ++level) {
      const int s = M >> level;
      Index3 start{0, 0, 0}, count{1, 1, 1};
      for (int a = 0; a < n; ++a) {
        start[a] = sys.offset[a] % s;
        count[a] = (M - start[a]) / s;
      }
      std::vector<CellBox> cubes;
      CellBox pos;
      pos.lo = {0, 0, 0};
      pos.hi = count;
      for_each_cell(pos, n, [&](const Index3& i) {
        CellBox q;
        for (int a = 0; a < n; ++a) {
          q.lo[a] = start[a] + i[a] * s;
          q.hi[a] = q.lo[a] + s;
        }
        cubes.push_back(q);
      });
      sys.levels.push_back(std::move(cubes));
      sys.starts.push_back(start);
      sys.counts.push_back(count);
    }
    out.push_back(std::move(sys));
  }
  return out;
}

namespace {

/// Per-axis continuous extents [lo, hi] that must lie inside the chosen cube.
ContainingCube smallest_containing(const Domain& d, const std::vector<DyadicSystem>& systems,
                                   const std::array<double, 3>& lo, const std::array<double, 3>& hi) {
  const int n = d.dim();
  const double h = d.spacing(), L = d.half_width(), eps = 1e-9 * h;
  std::optional<ContainingCube> best;
  int best_side = 0;
  for (const DyadicSystem& sys : systems) {
    for (int level = sys.depth; level >= 0; --level) {
      const int s = sys.side_cells(level);
      if (best && s >= best_side) break;
      // the only candidate cube per axis is the one containing lo
      CellBox q;
      bool ok = true;
      for (int a = 0; a < n && ok; ++a) {
        const double u = (lo[a] + L) / h;
        const int st = sys.starts[level][a];
        const int i = static_cast<int>(std::floor((u - st + 1e-9) / s));
        if (i < 0 || i >= sys.counts[level][a]) {
          ok = false;
          break;
        }
        q.lo[a] = st + i * s;
        q.hi[a] = q.lo[a] + s;
        if (q.lo[a] * h - L > lo[a] + eps || q.hi[a] * h - L < hi[a] - eps) ok = false;
      }
      if (!ok) continue;
      ContainingCube c;
      c.box = q;
      c.tag = DyadicTag{sys.id, level, *sys.index_of(level, q, n)};
      best = c;
      best_side = s;
      break;
    }
  }
  if (!best) fail(ErrorKind::Boundary, "no dyadic cube inside the box contains the region");
  return *best;
}

}  // namespace

ContainingCube containing_cube(const Domain& d, const std::vector<DyadicSystem>& systems, const Ball& b) {
  const int n = d.dim();
  if (2 * b.radius < d.spacing()) fail(ErrorKind::InvalidArgument, "ball diameter below the grid spacing");
  if (2 * b.radius > d.half_width() / 2) fail(ErrorKind::InvalidArgument, "ball diameter above L/2");
  std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < n; ++a) {
    lo[a] = b.center[a] - b.radius;
    hi[a] = b.center[a] + b.radius;
  }
  ContainingCube c = smallest_containing(d, systems, lo, hi);
  const double h = d.spacing(), L = d.half_width();
  double far = 0;
  for (int a = 0; a < n; ++a) {
    const double e = std::max(std::abs(c.box.lo[a] * h - L - b.center[a]), std::abs(c.box.hi[a] * h - L - b.center[a]));
    far += e * e;
  }
  c.dilation = std::sqrt(far) / b.radius;
  return c;
}

ContainingCube containing_cube(const Domain& d, const std::vector<DyadicSystem>& systems, const Cube& q) {
  const int n = d.dim();
  if (q.side < d.spacing()) fail(ErrorKind::InvalidArgument, "cube side below the grid spacing");
  if (q.side * std::sqrt(double(n)) > d.half_width() / 2) fail(ErrorKind::InvalidArgument, "cube diameter above L/2");
  std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < n; ++a) {
    lo[a] = q.center[a] - q.side / 2;
    hi[a] = q.center[a] + q.side / 2;
  }
  ContainingCube c = smallest_containing(d, systems, lo, hi);
  const double h = d.spacing(), L = d.half_width();
  double far = 0;
  for (int a = 0; a < n; ++a)
    far = std::max({far, std::abs(c.box.lo[a] * h - L - q.center[a]), std::abs(c.box.hi[a] * h - L - q.center[a])});
  c.dilation = far / (q.side / 2);
  return c;
}

namespace {

CellBox child_box(const CellBox& P, int child, int n) {
  CellBox c = P;
  for (int a = 0; a < n; ++a) {
    const int mid = (P.lo[a] + P.hi[a]) / 2;
    if ((child >> a) & 1)
      c.lo[a] = mid;
    else
      c.hi[a] = mid;
  }
  return c;
}

class StoppingTime {
 public:
  StoppingTime(const LinearOperator& T, const ComplexGridFunction& f, const DyadicSystem& sys, double alpha, double r,
               const SparseOptions& opts)
      : T_(T),
        f_(f),
        d_(f.domain()),
        sys_(sys),
        alpha_(alpha),
        r_(r),
        opts_(opts),
        fr_(d_, f.values().cwiseAbs().array().pow(r).matrix()),
        sum_fr_(fr_) {}

  SparseFamily run(int level, std::size_t index) {
    SparseFamily fam;
    visit(sys_.levels[level][index], level, -1, fam);
    return fam;
  }

 private:
  void visit(const CellBox& P, int level, int parent, SparseFamily& fam) {
    const int n = d_.dim();
    const int self = static_cast<int>(fam.cubes.size());
    fam.cubes.push_back(SparseCube{P, DyadicTag{sys_.id, level, *sys_.index_of(level, P, n)}, {}, parent});
    std::vector<CellBox> children = stopping_children(P, fam);
    std::vector<char> in_child(P.count(n), 0);
    for (const CellBox& c : children) for_each_cell(c, n, [&](const Index3& idx) { in_child[local(P, idx)] = 1; });
    std::vector<std::size_t> witness;
    for_each_cell(P, n, [&](const Index3& idx) {
      if (!in_child[local(P, idx)]) witness.push_back(d_.flatten(idx));
    });
    fam.cubes[self].witness = std::move(witness);
    const int child_level = level + 1;
    for (const CellBox& c : children) {
      int lvl = child_level;
      while (sys_.side_cells(lvl) != c.extent(0)) ++lvl;
      visit(c, lvl, self, fam);
    }
  }

  std::size_t local(const CellBox& P, const Index3& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < d_.dim(); ++a)
      flat = flat * static_cast<std::size_t>(P.extent(a)) + static_cast<std::size_t>(idx[a] - P.lo[a]);
    return flat;
  }

  std::vector<CellBox> stopping_children(const CellBox& P, SparseFamily& fam) {
    const int n = d_.dim();
    const int min_side = sys_.side_cells(sys_.depth);
    if (P.extent(0) <= min_side) return {};
    const CellBox aP = dilate(d_, P, alpha_);
    const double ref = std::pow(sum_fr_.average(aP), 1 / r_);
    if (!(ref > 0)) return {};

    ComplexGridFunction g(d_);
    for_each_cell(aP, n, [&](const Index3& idx) {
      const std::size_t i = d_.flatten(idx);
      g[i] = f_[i];
    });
    const ComplexGridFunction Tg = T_.apply(g);
    cplx mean = 0;
    for_each_cell(P, n, [&](const Index3& idx) { mean += Tg[d_.flatten(idx)]; });
    mean /= static_cast<double>(P.count(n));

    const std::size_t count = P.count(n);
    std::vector<double> score(count, 0.0);
    for_each_cell(P, n, [&](const Index3& idx) { score[local(P, idx)] = std::abs(Tg[d_.flatten(idx)] - mean); });
    // dyadic maximal function over strict subcubes
    std::function<void(const CellBox&)> descend = [&](const CellBox& Q) {
      for (int c = 0; c < (1 << n); ++c) {
        const CellBox q = child_box(Q, c, n);
        const double avg = std::pow(sum_fr_.average(q), 1 / r_);
        for_each_cell(q, n, [&](const Index3& idx) {
          double& s = score[local(P, idx)];
          s = std::max(s, avg);
        });
        if (q.extent(0) > min_side) descend(q);
      }
    };
    descend(P);
    for (double& s : score) {
      s /= ref;
      if (!std::isfinite(s)) {
        fam.degenerate = true;
        fam.note = "non-finite stopping score";
        return {};
      }
    }
    std::vector<double> sorted = score;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t k = count / 2;
    const double threshold = std::max(opts_.lambda, sorted[k]);
    std::vector<char> exceed(count);
    for (std::size_t i = 0; i < count; ++i) exceed[i] = score[i] > threshold;

    // maximal dyadic subcubes lying inside the exceed set
    std::vector<CellBox> children;
    std::function<void(const CellBox&)> collect = [&](const CellBox& Q) {
      for (int c = 0; c < (1 << n); ++c) {
        const CellBox q = child_box(Q, c, n);
        bool all = true, any = false;
        for_each_cell(q, n, [&](const Index3& idx) {
          const bool e = exceed[local(P, idx)];
          all = all && e;
          any = any || e;
        });
        if (all)
          children.push_back(q);
        else if (any && q.extent(0) > min_side)
          collect(q);
      }
    };
    collect(P);
    return children;
  }

  const LinearOperator& T_;
  const ComplexGridFunction& f_;
  const Domain& d_;
  const DyadicSystem& sys_;
  double alpha_, r_;
  SparseOptions opts_;
  GridFunction fr_;
  PrefixSum sum_fr_;
};

}  // namespace

SparseFamily construct_sparse_family(const LinearOperator& T, const ComplexGridFunction& f, const DyadicSystem& system,
                                     int level, std::size_t index, double alpha, double r, const SparseOptions& opts) {
  if (!(alpha >= 3)) fail(ErrorKind::InvalidArgument, "alpha must be at least 3");
  if (!(r >= 1)) fail(ErrorKind::InvalidArgument, "r must be at least 1");
  if (level < 0 || level > system.depth || index >= system.levels[level].size())
    fail(ErrorKind::InvalidArgument, "root is not a cube of the system");
  const Domain& d = f.domain();
  const CellBox& root = system.levels[level][index];
  const CellBox aroot = dilate(d, root, alpha);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (f[i] != cplx(0) && !aroot.contains(d.unflatten(i), d.dim()))
      fail(ErrorKind::InvalidArgument, "f must be supported in the dilated root");
  StoppingTime st(T, f, system, alpha, r, opts);
  SparseFamily fam = st.run(level, index);
  if (fam.degenerate) {
    SparseFamily only;
    only.degenerate = true;
    only.note = fam.note;
    SparseCube c{root, DyadicTag{system.id, level, index}, {}, -1};
    for_each_cell(root, d.dim(), [&](const Index3& idx) { c.witness.push_back(d.flatten(idx)); });
    only.cubes.push_back(std::move(c));
    return only;
  }
  return fam;
}

bool is_sparse(const SparseFamily& family, const Domain& d, std::string* why) {
  const int n = d.dim();
  std::vector<char> used(d.size(), 0);
  auto bad = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  for (const SparseCube& q : family.cubes) {
    for (std::size_t i : q.witness) {
      if (i >= d.size() || !q.box.contains(d.unflatten(i), n)) return bad("witness outside its cube");
      if (used[i]) return bad("witness sets overlap");
      used[i] = 1;
    }
    // exact integer comparison |E_Q| >= eta |Q| for eta = 1/2
    if (2 * q.witness.size() < q.box.count(n)) return bad("witness smaller than eta |Q|");
  }
  return true;
}

GridFunction sparse_apply(const SparseFamily& S, const GridFunction& f, double r, double p0, double N,
                          const CriticalFunctionTable& table) {
  if (!(r >= 1) || !(p0 >= 1)) fail(ErrorKind::InvalidArgument, "r and p0 must be at least 1");
  const Domain& d = f.domain();
  const int n = d.dim();
  const PrefixSum sfr(GridFunction(d, f.values().cwiseAbs().array().pow(r).matrix()));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.size()));
  for (const SparseCube& q : S.cubes) {
    const double avg = sfr.average(q.box);
    const double term = std::pow(avg, p0 / r) * std::pow(psi_theta(to_cube(d, q.box), N, table), -p0);
    for_each_cell(q.box, n, [&](const Index3& idx) { acc[static_cast<Eigen::Index>(d.flatten(idx))] += term; });
  }
  return GridFunction(d, acc.array().pow(1 / p0).matrix());
}

GridFunction sparse_commutator_apply(const SparseFamily& S, const GridFunction& b, const GridFunction& f, double N,
                                     const CriticalFunctionTable& table, CommutatorMode mode) {
  const Domain& d = f.domain();
  const int n = d.dim();
  const PrefixSum sb(b), sf(f);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.size()));
  for (const SparseCube& q : S.cubes) {
    const double bq = sb.average(q.box);
    const double psi = psi_theta(to_cube(d, q.box), N, table);
    if (mode == CommutatorMode::Direct) {
      const double fq = sf.average(q.box);
      for_each_cell(q.box, n, [&](const Index3& idx) {
        const std::size_t i = d.flatten(idx);
        acc[static_cast<Eigen::Index>(i)] += std::abs(b[i] - bq) * fq / psi;
      });
    } else {
      double s = 0;
      for_each_cell(q.box, n, [&](const Index3& idx) {
        const std::size_t i = d.flatten(idx);
        s += std::abs(b[i] - bq) * f[i];
      });
      const double term = s / static_cast<double>(q.box.count(n)) / psi;
      for_each_cell(q.box, n, [&](const Index3& idx) { acc[static_cast<Eigen::Index>(d.flatten(idx))] += term; });
    }
  }
  return GridFunction(d, std::move(acc));
}

EnlargedCube enlarged_cube(const Domain& d, const std::vector<DyadicSystem>& systems, const CellBox& P) {
  const int n = d.dim();
  const CellBox target = dilate(d, P, 3);
  const std::size_t bound = [&] {
    std::size_t b = P.count(n);
    for (int a = 0; a < n; ++a) b *= 9;
    return b;
  }();
  std::optional<EnlargedCube> best, fallback;
  for (const DyadicSystem& sys : systems) {
    for (int level = sys.depth; level >= 0; --level) {
      for (std::size_t i = 0; i < sys.levels[level].size(); ++i) {
        const CellBox& R = sys.levels[level][i];
        if (!R.contains(target, n)) continue;
        const EnlargedCube c{R, DyadicTag{sys.id, level, i}, R.count(n) <= bound};
        auto better = [&](const std::optional<EnlargedCube>& cur) {
          return !cur || R.count(n) < cur->box.count(n);
        };
        if (c.within_bound && better(best)) best = c;
        if (better(fallback)) fallback = c;
        break;
      }
    }
  }
  if (best) return *best;
  if (fallback) {
    EnlargedCube c = *fallback;
    c.within_bound = false;
    return c;
  }
  fail(ErrorKind::Boundary, "no dyadic cube contains the tripled cube");
}

std::string sparse_family_json(const SparseFamily& S) {
  nlohmann::ordered_json j;
  j["eta"] = S.eta;
  j["degenerate"] = S.degenerate;
  j["cubes"] = nlohmann::ordered_json::array();
  for (const SparseCube& q : S.cubes) {
    nlohmann::ordered_json c;
    c["system"] = q.tag.system;
    c["level"] = q.tag.level;
    c["index"] = q.tag.index;
    c["witness"] = q.witness;
    j["cubes"].push_back(std::move(c));
  }
  return j.dump();
}

}  // namespace spm

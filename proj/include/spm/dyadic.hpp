#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spm/grid.hpp"
#include "spm/operator.hpp"
#include "spm/potential.hpp"

namespace spm {

/// One shifted dyadic grid: level l has cubes of M / 2^l cells, anchored at a
/// per-axis offset. Only cubes lying fully inside the box are kept.
struct DyadicSystem {
  int id = 0;
  int points = 0;
  Index3 offset{0, 0, 0};
  int depth = 0;
  /// levels[l][index]
  std::vector<std::vector<CellBox>> levels;
  /// Per level: first anchor and cube count per axis.
  std::vector<Index3> starts;
  std::vector<Index3> counts;

  int side_cells(int level) const;
  /// Index of `box` at `level`, if it is a cube of this system.
  std::optional<std::size_t> index_of(int level, const CellBox& box, int n) const;
  std::size_t cube_count() const;
};

/// 3^n systems, offsets round(t M / 3) with t in {0, 1, 2} per axis.
std::vector<DyadicSystem> build_systems(const Domain& d, int depth);
/// Largest depth with M divisible by 2^depth.
int max_dyadic_depth(const Domain& d);

struct ContainingCube {
  CellBox box;
  DyadicTag tag;
  /// Smallest Lambda with Q contained in Lambda B.
  double dilation = 0;
};

ContainingCube containing_cube(const Domain& d, const std::vector<DyadicSystem>& systems, const Ball& b);
ContainingCube containing_cube(const Domain& d, const std::vector<DyadicSystem>& systems, const Cube& q);

struct SparseCube {
  CellBox box;
  DyadicTag tag;
  /// Flat node indices of E_Q.
  std::vector<std::size_t> witness;
  int parent = -1;
};

struct SparseFamily {
  std::vector<SparseCube> cubes;
  double eta = 0.5;
  bool degenerate = false;
  std::string note;
};

struct SparseOptions {
  /// Stopping level relative to the reference average.
  double lambda = 2;
};

/// Stopping-time family inside `root` (a cube of `system`). At a cube P the score is
/// max(dyadic maximal function of |f|^r over strict subcubes, |T(f chi_{alpha P}) - mean_P|)
/// divided by (avg_{alpha P} |f|^r)^{1/r}; cells scoring above max(lambda, median-type
/// quantile) form the exceed set, whose maximal dyadic subcubes are the children.
SparseFamily construct_sparse_family(const LinearOperator& T, const ComplexGridFunction& f, const DyadicSystem& system,
                                     int level, std::size_t index, double alpha, double r,
                                     const SparseOptions& opts = {});

/// Exact checks: E_Q within Q, |E_Q| >= eta |Q| in cell counts, witnesses pairwise disjoint.
bool is_sparse(const SparseFamily& family, const Domain& d, std::string* why = nullptr);

/// [sum_Q (avg_Q |f|^r)^{p0/r} Psi_N(Q)^{-p0} chi_Q]^{1/p0}.
GridFunction sparse_apply(const SparseFamily& S, const GridFunction& f, double r, double p0, double N,
                          const CriticalFunctionTable& table);

enum class CommutatorMode { Direct, Star };

GridFunction sparse_commutator_apply(const SparseFamily& S, const GridFunction& b, const GridFunction& f, double N,
                                     const CriticalFunctionTable& table, CommutatorMode mode);

struct EnlargedCube {
  CellBox box;
  DyadicTag tag;
  /// |R| <= 9^n |P| held; otherwise the smallest containing cube was used.
  bool within_bound = true;
};

/// Smallest dyadic cube over all systems containing 3P (clipped to the box) with
/// |R| <= 9^n |P|; ties go to the lower system id.
EnlargedCube enlarged_cube(const Domain& d, const std::vector<DyadicSystem>& systems, const CellBox& P);

/// JSON text: list of {system, level, index, witness}.
std::string sparse_family_json(const SparseFamily& S);

}  // namespace spm

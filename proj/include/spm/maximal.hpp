#pragma once

#include <cstdint>
#include <vector>

#include "spm/dyadic.hpp"
#include "spm/operator.hpp"
#include "spm/potential.hpp"
#include "spm/weights.hpp"

namespace spm {

/// Cell-aligned cubes of side 2^k cells lying inside the box, every position.
std::vector<int> catalog_sides(const Domain& d);

/// sup over catalog cubes Q containing x of Psi_theta(Q)^{-1} (avg_Q |f|^r)^{1/r}.
GridFunction local_maximal(const GridFunction& f, double r, double theta, const CriticalFunctionTable& table);
/// Plain Hardy-Littlewood version (theta = 0), no critical table needed.
GridFunction local_maximal(const GridFunction& f, double r);

/// sup over dyadic cubes of all systems containing x of w(Q)^{-1} int_Q |f| w.
GridFunction dyadic_weighted_maximal(const GridFunction& f, const GridFunction& w,
                                     const std::vector<DyadicSystem>& systems);

/// sup over catalog cubes of Psi_theta(Q)^{-1} ||f||_{Phi, Q}.
GridFunction orlicz_maximal(const GridFunction& f, const YoungFunction& phi, double theta,
                            const CriticalFunctionTable& table);

struct SharpTruncationOptions {
  /// Cubes with more nodes use a seeded subsample of pairs.
  std::size_t exact_node_cap = 4096;
  std::size_t subsample = 4096;
  std::uint64_t seed = 7;
};

/// sup over catalog cubes Q containing x of max_{x', x'' in Q} |T(f chi_{complement of alpha Q})(x') - (x'')|.
GridFunction sharp_grand_truncation(const LinearOperator& T, const ComplexGridFunction& f, double alpha,
                                    const SharpTruncationOptions& opts = {});

}  // namespace spm

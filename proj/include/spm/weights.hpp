#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spm/grid.hpp"
#include "spm/potential.hpp"

namespace spm {

struct WeightSpec {
  enum class Kind { Unit, Power, ShiftedPower, Gridded };

  Kind kind = Kind::Unit;
  std::string id = "unit";
  double a = 0;
  GridFunction values;

  static WeightSpec unit(const Domain& d);
  /// |x|^a
  static WeightSpec power(const Domain& d, double a);
  /// (1 + |x|)^a
  static WeightSpec shifted_power(const Domain& d, double a);
  static WeightSpec gridded(GridFunction w, std::string id = "gridded");

  std::string describe() const;
};

/// Cubes used to discretise suprema over all cubes.
struct CubeFamily {
  std::vector<CellBox> cubes;
  std::uint64_t seed = 0;
  std::size_t size() const { return cubes.size(); }
};

/// Dyadic cubes of every system with side in [2h, 2L] plus `random_count` seeded
/// cell-aligned cubes. `systems` limits the shifted systems (0 = all 3^n).
CubeFamily build_cube_family(const Domain& d, std::size_t random_count, std::uint64_t seed, int systems = 0);
/// Only cubes centred at the origin, one per cell-count parity compatible side.
CubeFamily centered_cube_family(const Domain& d);
/// First half of a family; the refinement report compares it against the full family.
CubeFamily prefix_family(const CubeFamily& family, std::size_t count);

struct ApEstimate {
  double value = 0;
  /// Index of the maximising cube.
  std::size_t argmax = 0;
  /// The dual average overflowed on some cube: the weight is signalled outside the class.
  bool outside_class = false;
  /// Value on the first half of the family.
  double half_family_value = 0;
};

/// max over the family of (Psi_theta(Q)|Q|)^{-1} int_Q w * ((Psi_theta(Q)|Q|)^{-1} int_Q w^{-1/(p-1)})^{p-1}.
ApEstimate ap_characteristic(const GridFunction& w, double p, double theta, const CriticalFunctionTable& table,
                             const CubeFamily& family);
/// Per-cube products, same order as the family.
std::vector<double> ap_products(const GridFunction& w, double p, double theta, const CriticalFunctionTable& table,
                                const CubeFamily& family);

/// w^{-1/(p-1)}
GridFunction dual_weight(const GridFunction& w, double p);

struct ReverseHolderFit {
  double r = 1;
  double C = 0;
  double N0 = 0;
  double C_limit = 0;
  bool overflow = false;
  std::size_t flagged_cube = 0;
};

double reverse_holder_exponent(double p, double theta, int n, double characteristic);
ReverseHolderFit reverse_holder(const GridFunction& w, double p, double theta, double characteristic,
                                const CriticalFunctionTable& table, const CubeFamily& family);

/// max over the family of (Psi_theta(Q)|Q|)^{-1} int_Q |b - b_Q|.
double bmo_theta_norm(const GridFunction& b, double theta, const CriticalFunctionTable& table,
                      const CubeFamily& family);

/// Young functions for Luxemburg norms.
struct YoungFunction {
  enum class Kind { Power, LlogL, ExpL };
  Kind kind = Kind::Power;
  double p = 1;

  static YoungFunction power(double p) { return {Kind::Power, p}; }
  static YoungFunction llogl() { return {Kind::LlogL, 1}; }
  static YoungFunction expl() { return {Kind::ExpL, 1}; }
  double operator()(double t) const;
  std::string id() const;
};

/// inf{lambda > 0 : avg_Q Phi(|f| / lambda) <= 1}, bisection to relative 1e-8.
double luxemburg_norm(const GridFunction& f, const CellBox& Q, const YoungFunction& phi);
double luxemburg_norm(std::span<const double> values, const YoungFunction& phi);

}  // namespace spm

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spm/grid.hpp"
#include "spm/smooth.hpp"

namespace spm {

/// Catalog potentials V >= 0, not identically zero.
struct PotentialSpec {
  enum class Kind { Constant, Power, LipschitzSlab };

  Kind kind = Kind::Constant;
  std::string id = "constant";
  double constant = 1;
  double alpha = 2;
  /// Slab potential |x_n - (slope . x' + offset)|^alpha.
  Point slope{0, 0, 0};
  double offset = 0;
  /// Declared reverse-Hoelder validity: q in (1, rh_q_max).
  double rh_q_max = std::numeric_limits<double>::infinity();

  static PotentialSpec make_constant(double c);
  static PotentialSpec make_power(double alpha);
  static PotentialSpec make_hermite();
  static PotentialSpec make_lipschitz_slab(double alpha, const Point& slope, double offset = 0);

  /// Canonical text form, stable across runs; used for cache keys and reports.
  std::string describe() const;
};

double eval_potential(const PotentialSpec& spec, const Point& x, int n);
GridFunction sample_potential(const Domain& d, const PotentialSpec& spec);

struct Ball {
  Point center{0, 0, 0};
  double radius = 1;
};

/// Product quadrature over B(c, r) clipped to the box [-L, L]^n: Gauss-Legendre
/// in the radius, Gauss-Legendre in cos(polar) and trapezoid in azimuth.
class BallQuadrature {
 public:
  BallQuadrature(int n, int radial = 16, int polar = 12, int azimuth = 24);

  template <typename F>
  double integrate(F&& f, const Point& c, double r, double box_half_width) const {
    double total = 0;
    for (const auto& [dir, wdir] : directions_) {
      for (std::size_t k = 0; k < radial_.nodes.size(); ++k) {
        const double s = 0.5 * r * (radial_.nodes[k] + 1);
        Point x{0, 0, 0};
        bool inside = true;
        for (int i = 0; i < n_; ++i) {
          x[i] = c[i] + s * dir[i];
          if (std::abs(x[i]) > box_half_width) inside = false;
        }
        if (!inside) continue;
        total += wdir * radial_.weights[k] * 0.5 * r * std::pow(s, n_ - 1) * f(x);
      }
    }
    return total;
  }

  double volume(const Point& c, double r, double box_half_width) const;
  int dim() const { return n_; }

 private:
  int n_;
  GaussRule radial_;
  std::vector<std::pair<Point, double>> directions_;
};

/// Maximum over the balls of (avg V^q)^{1/q} / avg V; a lower bound on the
/// reverse-Hoelder constant.
double rh_constant(const PotentialSpec& spec, double q, const std::vector<Ball>& balls, int n,
                   double box_half_width);

struct CriticalRadiusOptions {
  int scan_points = 64;
  double relative_tolerance = 1e-6;
  int radial = 16;
  int polar = 12;
  int azimuth = 24;
};

struct CriticalRadius {
  double rho = 0;
  /// g never exceeded 1 on the scan range; rho is the largest scanned radius.
  bool flagged = false;
};

/// sup{r : r^{2-n} integral_{B(x,r) cap box} V <= 1}.
CriticalRadius critical_radius(const PotentialSpec& spec, const Point& x, const Domain& d,
                               const CriticalRadiusOptions& opts = {});
CriticalRadius critical_radius(const PotentialSpec& spec, const Point& x, const Domain& d,
                               const BallQuadrature& quad, const CriticalRadiusOptions& opts);

struct ShenConstants {
  double l0 = 0;
  double C0 = 0;
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
  /// Required C0 before rounding to the lattice.
  double required_C0 = 0;
};

class CriticalFunctionTable {
 public:
  CriticalFunctionTable(PotentialSpec spec, GridFunction rho, std::size_t flagged_nodes);

  const PotentialSpec& potential() const { return spec_; }
  const GridFunction& rho() const { return rho_; }
  const Domain& domain() const { return rho_.domain(); }
  std::size_t flagged_nodes() const { return flagged_; }
  /// Multilinear interpolation, clamped to the node range.
  double at(const Point& x) const;

  const std::optional<ShenConstants>& shen() const { return shen_; }
  void set_shen(ShenConstants c) { shen_ = c; }

 private:
  PotentialSpec spec_;
  GridFunction rho_;
  std::size_t flagged_;
  std::optional<ShenConstants> shen_;
};

CriticalFunctionTable build_critical_table(const Domain& d, const PotentialSpec& spec,
                                           const CriticalRadiusOptions& opts = {});

/// (1 + r / rho(center))^theta.
double psi_theta(const Point& center, double radius, double theta, const CriticalFunctionTable& table);
double psi_theta(const Cube& q, double theta, const CriticalFunctionTable& table);
double psi_theta(const Ball& b, double theta, const CriticalFunctionTable& table);

/// Seeded node-index pairs (x != y).
std::vector<std::pair<std::size_t, std::size_t>> sample_node_pairs(const Domain& d, std::size_t count,
                                                                   std::uint64_t seed);

/// Smallest lattice (l0, C0), lexicographic in l0 then C0, such that
/// C0^{-1}(1+|x-y|/rho(x))^{-l0} <= rho(y)/rho(x) <= C0(1+|x-y|/rho(x))^{l0/(l0+1)}
/// on every pair in both orientations. l0 in {0.25, ..., 8}, C0 in {1.05, ..., 16}.
ShenConstants fit_shen_constants(const CriticalFunctionTable& table,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

struct CriticalCovering {
  std::vector<Ball> balls;
  double coverage_fraction = 0;
  std::vector<double> kappas{1, 2, 4};
  std::vector<std::size_t> max_overlap;
  /// max_overlap(kappa) <= C kappa^N fitted in log-log.
  double fitted_C = 0;
  double fitted_N = 0;
};

CriticalCovering critical_covering(const CriticalFunctionTable& table);

}  // namespace spm

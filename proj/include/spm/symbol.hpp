#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spm/grid.hpp"

namespace spm {

/// sigma(x, eta) with its declared class S^order_{1,delta}.
struct SymbolSpec {
  std::string id;
  double order = 0;
  double delta = 0;
  bool x_dependent = false;
  std::function<cplx(const Point& x, int n, double eta)> eval;

  cplx operator()(const Point& x, int n, double eta) const { return eval(x, n, eta); }
};

/// Catalog ids: identity, multiplier, separable, coupled.
SymbolSpec make_symbol(const std::string& id);
std::vector<std::string> symbol_catalog();

SymbolSpec make_multiplier_symbol(std::string id, std::function<cplx(double)> m);

/// Littlewood-Paley pieces psi_0(eta) = Theta(2 eta), psi_1 = Theta - Theta(2 .),
/// psi_j(eta) = psi_1(2^{-(j-1)} eta).
class PartitionOfUnity {
 public:
  std::string id() const { return "bump-integral-v1"; }
  double theta(double eta) const;
  double psi(int j, double eta) const;
  /// Sum of psi_0..psi_J, equal to Theta(2^{-(J-1)} eta).
  double partial_sum(int J, double eta) const;
};

PartitionOfUnity make_partition();

/// sigma_j(x, eta) = sigma(x, eta) psi_j(eta), j = 0..J.
std::vector<SymbolSpec> dyadic_pieces(const SymbolSpec& sigma, int J);
SymbolSpec dyadic_piece(const SymbolSpec& sigma, int j);

/// Smallest J whose pieces exhaust eta <= eta_max.
int pieces_needed(double eta_max);

struct SeminormEntry {
  int l = 0;
  Index3 alpha{0, 0, 0};
  double value = 0;
  /// Same seminorm with the finite-difference steps halved.
  double refined = 0;
  /// refined/value outside [0.9, 1.1] while value is not negligible.
  bool unstable = false;
};

struct SeminormOptions {
  double eta_step = 1e-3;
  double x_step = 1e-3;
  /// Absolute level below which a seminorm is treated as zero.
  double negligible = 1e-6;
};

/// sup over samples of |Delta_x^alpha Delta_eta^l sigma| (1 + eta)^{l - m}.
std::vector<SeminormEntry> class_seminorms(const SymbolSpec& sigma, int l_max, int alpha_max, int n,
                                           const std::vector<Point>& xs, const std::vector<double>& etas,
                                           const SeminormOptions& opts = {});

}  // namespace spm

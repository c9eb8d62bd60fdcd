#pragma once

#include <vector>

namespace spm {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int points);

/// Smooth step: 1 on (-inf, 1], 0 on [2, inf), built from the normalised
/// integral of exp(-1/(t(1-t))) across the transition. Accurate to roundoff.
double smooth_cutoff(double eta);

/// 0 on (-inf, a/2], 1 on [a, inf).
inline double smooth_ramp_up(double mu, double a) { return 1.0 - smooth_cutoff(2.0 * mu / a); }

}  // namespace spm

#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

/// Number of eigenvalues below x of the symmetric tridiagonal (diag, off).
inline std::size_t sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double x) {
  std::size_t count = 0;
  double q = diag[0] - x;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < diag.size(); ++i) {
    const double prev = q == 0 ? 1e-300 : q;
    q = diag[i] - x - off[i - 1] * off[i - 1] / prev;
    if (q < 0) ++count;
  }
  return count;
}

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
inline double tridiagonal_eigenvalue(const std::vector<double>& diag, const std::vector<double>& off, std::size_t k) {
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    double r = 0;
    if (i > 0) r += std::abs(off[i - 1]);
    if (i + 1 < diag.size()) r += std::abs(off[i]);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(diag, off, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Lowest `count` Dirichlet eigenvalues of -u'' + x^2 u on [-L, L] with M cell-centred nodes.
inline std::vector<double> harmonic_eigenvalues(double L, int M, std::size_t count) {
  const double h = 2 * L / M;
  std::vector<double> diag(M), off(M - 1, -1 / (h * h));
  for (int i = 0; i < M; ++i) {
    const double x = -L + (i + 0.5) * h;
    diag[i] = 2 / (h * h) + x * x;
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(tridiagonal_eigenvalue(diag, off, k));
  return out;
}

/// Richardson extrapolation for an O(h^2) error from spacings h and h/2.
inline double richardson(double coarse, double fine) { return (4 * fine - coarse) / 3; }

}  // namespace oracle

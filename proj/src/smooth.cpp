#include "spm/smooth.hpp"

#include <cmath>
#include <numbers>

namespace spm {

GaussRule gauss_legendre(int points) {
  GaussRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  // Legendre P_n and its derivative at x by the three-term recurrence
  auto legendre = [points](double x, double& p, double& dp) {
    double p0 = 1, p1 = x;
    for (int k = 2; k <= points; ++k) {
      const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    p = points == 0 ? 1 : p1;
    dp = points * (x * p1 - p0) / (x * x - 1);
  };
  for (int i = 0; i < (points + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double p = 0, dp = 1;
    for (int iter = 0; iter < 100; ++iter) {
      legendre(x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(x, p, dp);
    rule.nodes[i] = -x;
    rule.nodes[points - 1 - i] = x;
    rule.weights[i] = rule.weights[points - 1 - i] = 2 / ((1 - x * x) * dp * dp);
  }
  return rule;
}

namespace {

double bump(double t) {
  if (t <= 0 || t >= 1) return 0;
  return std::exp(-1 / (t * (1 - t)));
}

class CutoffTable {
 public:
  static constexpr int kIntervals = 2048;

  CutoffTable() : rule_(gauss_legendre(12)), cumulative_(kIntervals + 1, 0.0) {
    const GaussRule fine = gauss_legendre(24);
    for (int k = 0; k < kIntervals; ++k)
      cumulative_[k + 1] = cumulative_[k] + integrate(fine, double(k) / kIntervals, double(k + 1) / kIntervals);
    total_ = cumulative_.back();
  }

  /// integral of the bump over [0, u] divided by the total
  double fraction(double u) const {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    const int k = std::min(kIntervals - 1, static_cast<int>(u * kIntervals));
    const double a = double(k) / kIntervals;
    return (cumulative_[k] + integrate(rule_, a, u)) / total_;
  }

 private:
  static double integrate(const GaussRule& r, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * bump(mid + half * r.nodes[i]);
    return s * half;
  }

  GaussRule rule_;
  std::vector<double> cumulative_;
  double total_ = 1;
};

const CutoffTable& table() {
  static const CutoffTable t;
  return t;
}

}  // namespace

double smooth_cutoff(double eta) {
  if (eta <= 1) return 1;
  if (eta >= 2) return 0;
  return 1 - table().fraction(eta - 1);
}

}  // namespace spm

#include "spm/symbol.hpp"

#include <cmath>
#include <numbers>

#include "spm/smooth.hpp"

namespace spm {

namespace {

double gaussian_bump(const Point& x, int n) {
  double r2 = 0;
  for (int i = 0; i < n; ++i) r2 += x[i] * x[i];
  return std::exp(-r2);
}

}  // namespace

SymbolSpec make_multiplier_symbol(std::string id, std::function<cplx(double)> m) {
  SymbolSpec s;
  s.id = std::move(id);
  s.x_dependent = false;
  s.eval = [m = std::move(m)](const Point&, int, double eta) { return m(eta); };
  return s;
}

SymbolSpec make_symbol(const std::string& id) {
  if (id == "identity") return make_multiplier_symbol(id, [](double) { return cplx(1); });
  if (id == "multiplier") return make_multiplier_symbol(id, [](double eta) { return cplx(eta * eta / (1 + eta * eta)); });
  SymbolSpec s;
  s.id = id;
  s.x_dependent = true;
  if (id == "separable") {
    s.eval = [](const Point& x, int n, double eta) {
      return cplx(0.5 * (1 + gaussian_bump(x, n)) * eta * eta / (1 + eta * eta));
    };
    return s;
  }
  if (id == "coupled") {
    s.eval = [](const Point& x, int n, double eta) {
      const double th = 0.5 * std::numbers::pi * gaussian_bump(x, n);
      return std::exp(cplx(0, th * eta / (1 + eta)));
    };
    return s;
  }
  fail(ErrorKind::Config, "unknown symbol id '" + id + "'");
}

std::vector<std::string> symbol_catalog() { return {"identity", "multiplier", "separable", "coupled"}; }

double PartitionOfUnity::theta(double eta) const { return smooth_cutoff(eta); }

double PartitionOfUnity::psi(int j, double eta) const {
  if (j < 0) fail(ErrorKind::InvalidArgument, "piece index must be nonnegative");
  if (j == 0) return smooth_cutoff(2 * eta);
  const double u = std::ldexp(eta, -(j - 1));
  return smooth_cutoff(u) - smooth_cutoff(2 * u);
}

double PartitionOfUnity::partial_sum(int J, double eta) const {
  double s = 0;
  for (int j = 0; j <= J; ++j) s += psi(j, eta);
  return s;
}

PartitionOfUnity make_partition() { return {}; }

SymbolSpec dyadic_piece(const SymbolSpec& sigma, int j) {
  SymbolSpec piece = sigma;
  piece.id = sigma.id + "#" + std::to_string(j);
  const PartitionOfUnity pu;
  piece.eval = [base = sigma.eval, pu, j](const Point& x, int n, double eta) {
    const double w = pu.psi(j, eta);
    return w == 0 ? cplx(0) : base(x, n, eta) * w;
  };
  return piece;
}

std::vector<SymbolSpec> dyadic_pieces(const SymbolSpec& sigma, int J) {
  if (J < 0) fail(ErrorKind::InvalidArgument, "J must be nonnegative");
  std::vector<SymbolSpec> pieces;
  for (int j = 0; j <= J; ++j) pieces.push_back(dyadic_piece(sigma, j));
  return pieces;
}

int pieces_needed(double eta_max) {
  // sum_{j<=J} psi_j = 1 on eta <= 2^{J-1}
  int J = 1;
  while (std::ldexp(1.0, J - 1) < eta_max) ++J;
  return J;
}

namespace {

double binomial(int n, int k) {
  double b = 1;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

std::vector<Index3> multi_indices(int n, int max_order) {
  std::vector<Index3> out;
  for (int a = 0; a <= max_order; ++a)
    for (int b = 0; b <= (n > 1 ? max_order - a : 0); ++b)
      for (int c = 0; c <= (n > 2 ? max_order - a - b : 0); ++c) out.push_back({a, b, c});
  return out;
}

/// Forward difference Delta_x^alpha Delta_eta^l sigma divided by the step powers.
double difference(const SymbolSpec& s, int n, const Point& x, double eta, int l, const Index3& alpha, double he,
                  double hx) {
  cplx acc = 0;
  const int a0 = alpha[0], a1 = n > 1 ? alpha[1] : 0, a2 = n > 2 ? alpha[2] : 0;
  for (int k = 0; k <= l; ++k)
    for (int i0 = 0; i0 <= a0; ++i0)
      for (int i1 = 0; i1 <= a1; ++i1)
        for (int i2 = 0; i2 <= a2; ++i2) {
          const double c = binomial(l, k) * binomial(a0, i0) * binomial(a1, i1) * binomial(a2, i2) *
                           (((l - k) + (a0 - i0) + (a1 - i1) + (a2 - i2)) % 2 ? -1.0 : 1.0);
          Point y = x;
          y[0] += i0 * hx;
          y[1] += i1 * hx;
          y[2] += i2 * hx;
          const cplx v = s(y, n, eta + k * he);
          if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            fail(ErrorKind::SymbolEvaluation, "symbol is not finite at a sample");
          acc += c * v;
        }
  return std::abs(acc) / (std::pow(he, l) * std::pow(hx, a0 + a1 + a2));
}

}  // namespace

std::vector<SeminormEntry> class_seminorms(const SymbolSpec& sigma, int l_max, int alpha_max, int n,
                                           const std::vector<Point>& xs, const std::vector<double>& etas,
                                           const SeminormOptions& opts) {
  std::vector<SeminormEntry> table;
  for (int l = 0; l <= l_max; ++l) {
    for (const Index3& alpha : multi_indices(n, alpha_max)) {
      SeminormEntry e;
      e.l = l;
      e.alpha = alpha;
      for (const Point& x : xs)
        for (double eta : etas) {
          const double w = std::pow(1 + eta, l - sigma.order);
          e.value = std::max(e.value, w * difference(sigma, n, x, eta, l, alpha, opts.eta_step, opts.x_step));
          e.refined =
              std::max(e.refined, w * difference(sigma, n, x, eta, l, alpha, opts.eta_step / 2, opts.x_step / 2));
        }
      if (e.value > opts.negligible) {
        const double ratio = e.refined / e.value;
        e.unstable = ratio < 0.9 || ratio > 1.1;
      }
      table.push_back(e);
    }
  }
  return table;
}

}  // namespace spm

#include "spm/multiplier.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "spm/smooth.hpp"

namespace spm {

MultiplierOperator::MultiplierOperator(std::shared_ptr<const SpectralDecomposition> dec, SymbolSpec sigma)
    : dec_(std::move(dec)), sigma_(std::move(sigma)) {
  const Domain& d = dec_->domain();
  const int n = d.dim();
  const auto N = static_cast<Eigen::Index>(dec_->size());
  if (!sigma_.x_dependent) {
    const Point origin{0, 0, 0};
    m_ = spectral_values(*dec_, [&](double eta) { return sigma_(origin, n, eta); });
    return;
  }
  const Eigen::VectorXd eta = dec_->eigenvalues().cwiseSqrt();
  W_.resize(N, N);
  bool finite = true;
#pragma omp parallel for reduction(&& : finite)
  for (Eigen::Index x = 0; x < N; ++x) {
    const Point p = d.node(static_cast<std::size_t>(x));
    for (Eigen::Index k = 0; k < N; ++k) {
      const cplx v = sigma_(p, n, eta[k]);
      finite = finite && std::isfinite(v.real()) && std::isfinite(v.imag());
      W_(x, k) = v * dec_->vectors()(x, k);
    }
  }
  if (!finite) fail(ErrorKind::SymbolEvaluation, "symbol is not finite on the spectrum");
}

ComplexGridFunction MultiplierOperator::apply(const ComplexGridFunction& f) const {
  const Eigen::VectorXcd c = dec_->coefficients(f);
  if (!sigma_.x_dependent) return dec_->synthesize(m_.cwiseProduct(c));
  return ComplexGridFunction(dec_->domain(), W_ * c);
}

ComplexGridFunction MultiplierOperator::apply_adjoint(const ComplexGridFunction& g) const {
  if (!sigma_.x_dependent) return dec_->synthesize(m_.conjugate().cwiseProduct(dec_->coefficients(g)));
  // T = h^n W U^T, so T^* = h^n U W^*
  const Eigen::VectorXcd c = dec_->domain().cell_volume() * (W_.adjoint() * g.values());
  return dec_->synthesize(c);
}

Eigen::MatrixXcd MultiplierOperator::dense() const {
  const Eigen::MatrixXd& U = dec_->vectors();
  const double hn = dec_->domain().cell_volume();
  Eigen::MatrixXcd A(U.rows(), U.cols());
  if (!sigma_.x_dependent) {
    A.real() = U * m_.real().asDiagonal() * U.transpose();
    A.imag() = U * m_.imag().asDiagonal() * U.transpose();
  } else {
    A.real() = W_.real() * U.transpose();
    A.imag() = W_.imag() * U.transpose();
  }
  return A * hn;
}

ComplexGridFunction apply_spectral(std::shared_ptr<const SpectralDecomposition> dec, const SymbolSpec& sigma,
                                   const ComplexGridFunction& f) {
  return MultiplierOperator(std::move(dec), sigma).apply(f);
}

namespace {

/// Samples of the tau transform for one spatial point.
class PieceTransform {
 public:
  PieceTransform(const SymbolSpec& piece, int j, int n, double ramp_at, double dtau, double tmax)
      : piece_(piece), j_(j), n_(n), ramp_at_(ramp_at), dtau_(dtau) {
    Q_ = static_cast<long>(std::llround(tmax / dtau));
    std::size_t np = 1;
    while (np <= static_cast<std::size_t>(4 * Q_)) np <<= 1;
    np_ = np;
    period_ = 2 * std::numbers::pi / dtau;
    dmu_ = period_ / static_cast<double>(np_);
    samples_.resize(np_);
    spectrum_.resize(np_);
  }

  long Q() const { return Q_; }
  std::size_t length() const { return np_; }

  void compute(const Point& x) {
    const double scale = std::ldexp(1.0, j_);
    for (std::size_t m = 0; m < np_; ++m) {
      const double mu = static_cast<double>(m) * dmu_;
      if (mu >= 4) {
        samples_[m] = 0;
        continue;
      }
      const double ramp = smooth_ramp_up(mu, ramp_at_);
      samples_[m] = ramp == 0 ? cplx(0) : piece_(x, n_, scale * std::sqrt(mu)) * std::exp(mu) * ramp;
    }
    fft_.fwd(spectrum_, samples_);
  }

  /// F-hat(tau_q) for q in [-2Q, 2Q].
  cplx at(long q) const {
    const std::size_t idx = q >= 0 ? static_cast<std::size_t>(q) : np_ - static_cast<std::size_t>(-q);
    return spectrum_[idx] * dmu_;
  }

  double tail() const {
    double s = 0;
    for (long q = Q_ + 1; q <= 2 * Q_; ++q) s += std::abs(at(q)) + std::abs(at(-q));
    return s * dtau_ / (2 * std::numbers::pi);
  }

 private:
  const SymbolSpec& piece_;
  int j_, n_;
  double ramp_at_, dtau_;
  long Q_ = 0;
  std::size_t np_ = 0;
  double period_ = 0, dmu_ = 0;
  std::vector<cplx> samples_, spectrum_;
  Eigen::FFT<double> fft_;
};

}  // namespace

ComplexGridFunction apply_piece_quadrature(const SpectralDecomposition& dec, const SymbolSpec& piece, int j,
                                           const ComplexGridFunction& f, const QuadratureParams& params,
                                           QuadratureReport* report) {
  if (j < 0) fail(ErrorKind::InvalidArgument, "piece index must be nonnegative");
  if (!(params.dtau > 0) || !(params.tmax > 0)) fail(ErrorKind::InvalidArgument, "bad quadrature parameters");
  const Domain& d = dec.domain();
  const int n = d.dim();
  const auto N = static_cast<Eigen::Index>(dec.size());
  const double s = std::ldexp(1.0, -2 * j);
  const double ramp_at = 0.9 * s * dec.lambda_min();
  const std::vector<std::size_t> probe_nodes = [&] {
    std::vector<std::size_t> all(d.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (!piece.x_dependent) all.resize(1);
    return all;
  }();

  // grow T_max until the tail of |F-hat| passes
  double tmax = params.tmax, tail = 0;
  for (;;) {
    PieceTransform pt(piece, j, n, ramp_at, params.dtau, tmax);
    tail = 0;
    for (std::size_t x : probe_nodes) {
      pt.compute(d.node(x));
      tail = std::max(tail, pt.tail());
    }
    if (tail <= params.tail_tolerance) break;
    if (2 * tmax > params.tmax_limit)
      fail(ErrorKind::QuadratureUnderresolved, "tau tail above tolerance at the largest T_max");
    tmax *= 2;
  }

  PieceTransform pt(piece, j, n, ramp_at, params.dtau, tmax);
  const long Q = pt.Q();
  const double w = params.dtau / (2 * std::numbers::pi);
  const Eigen::VectorXcd c = dec.coefficients(f);
  const Eigen::VectorXd& lambda = dec.eigenvalues();
  if (report) *report = {tmax, params.dtau, tail, pt.length(), static_cast<std::size_t>(2 * Q + 1)};

  if (!piece.x_dependent) {
    pt.compute(d.node(0));
    Eigen::VectorXcd m = Eigen::VectorXcd::Zero(N);
    for (long q = -Q; q <= Q; ++q) {
      const cplx Fq = pt.at(q) * w;
      const double tau = q * params.dtau;
      for (Eigen::Index k = 0; k < N; ++k) m[k] += Fq * std::exp(-cplx(1, -tau) * (s * lambda[k]));
    }
    return dec.synthesize(m.cwiseProduct(c));
  }

  // out(x) = sum_q w F-hat(x, tau_q) [U diag(exp(-(1 - i tau_q) s lambda)) c](x), blocked over tau
  const Eigen::MatrixXd& U = dec.vectors();
  const long total = 2 * Q + 1;
  const long block = 512;
  Eigen::MatrixXcd Fhat(N, total);
  for (Eigen::Index x = 0; x < N; ++x) {
    pt.compute(d.node(static_cast<std::size_t>(x)));
    for (long q = -Q; q <= Q; ++q) Fhat(x, q + Q) = pt.at(q) * w;
  }
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(N);
  for (long start = 0; start < total; start += block) {
    const long width = std::min(block, total - start);
    Eigen::MatrixXcd C(N, width);
    for (long b = 0; b < width; ++b) {
      const double tau = (start + b - Q) * params.dtau;
      for (Eigen::Index k = 0; k < N; ++k) C(k, b) = std::exp(-cplx(1, -tau) * (s * lambda[k])) * c[k];
    }
    Eigen::MatrixXcd G(N, width);
    G.real() = U * C.real();
    G.imag() = U * C.imag();
    out += Fhat.middleCols(start, width).cwiseProduct(G).rowwise().sum();
  }
  return ComplexGridFunction(d, std::move(out));
}

Eigen::MatrixXcd kernel_matrix(std::shared_ptr<const SpectralDecomposition> dec, const SymbolSpec& sigma,
                               std::size_t cap) {
  if (dec->size() > cap) fail(ErrorKind::SizeLimit, "grid exceeds the kernel materialisation cap");
  const double hn = dec->domain().cell_volume();
  return MultiplierOperator(std::move(dec), sigma).dense() / hn;
}

Eigen::MatrixXcd truncate_kernel(const Domain& d, const Eigen::MatrixXcd& K, double gamma) {
  if (!(gamma > 2 * d.spacing())) fail(ErrorKind::TruncationBelowResolution, "gamma must exceed 2h");
  const auto N = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXcd out(N, N);
  for (Eigen::Index y = 0; y < N; ++y) {
    const Point py = d.node(static_cast<std::size_t>(y));
    for (Eigen::Index x = 0; x < N; ++x) {
      const double r = distance(d.node(static_cast<std::size_t>(x)), py, d.dim()) / gamma;
      const double keep = 1 - smooth_cutoff(r);
      out(x, y) = keep == 1 ? K(x, y) : K(x, y) * keep;
    }
  }
  return out;
}

ComplexGridFunction apply_truncated(const Domain& d, const Eigen::MatrixXcd& K_gamma, const ComplexGridFunction& f) {
  return DenseKernelOperator(d, K_gamma).apply(f);
}

ComplexGridFunction commutator_apply(const GridFunction& b, const LinearOperator& T, const ComplexGridFunction& f) {
  ComplexGridFunction out = multiply(b, T.apply(f));
  out.values() -= T.apply(multiply(b, f)).values();
  return out;
}

void write_kernel(const std::filesystem::path& path, const Domain& d, const Eigen::MatrixXcd& K) {
  // column-major storage flattened as (x, y) with y slowest
  io::write_binary_raw(path, 2 * d.dim(), d.half_width(), d.points(),
                       std::span<const cplx>(K.data(), static_cast<std::size_t>(K.size())), true);
}

}  // namespace spm

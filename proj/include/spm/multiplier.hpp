#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "spm/operator.hpp"
#include "spm/spectral.hpp"
#include "spm/symbol.hpp"

namespace spm {

/// T = sigma(x, sqrt L) applied through the eigenbasis:
/// Tf(x) = sum_k sigma(x, sqrt(lambda_k)) <f, u_k> u_k(x).
class MultiplierOperator : public LinearOperator {
 public:
  MultiplierOperator(std::shared_ptr<const SpectralDecomposition> dec, SymbolSpec sigma);

  const Domain& domain() const override { return dec_->domain(); }
  ComplexGridFunction apply(const ComplexGridFunction& f) const override;
  ComplexGridFunction apply_adjoint(const ComplexGridFunction& g) const override;
  Eigen::MatrixXcd dense() const override;
  using LinearOperator::apply;

  const SymbolSpec& symbol() const { return sigma_; }
  const SpectralDecomposition& decomposition() const { return *dec_; }

 private:
  std::shared_ptr<const SpectralDecomposition> dec_;
  SymbolSpec sigma_;
  /// x-independent: m(sqrt(lambda_k)); otherwise W(x, k) = sigma(x, sqrt(lambda_k)) u_k(x).
  Eigen::VectorXcd m_;
  Eigen::MatrixXcd W_;
};

ComplexGridFunction apply_spectral(std::shared_ptr<const SpectralDecomposition> dec, const SymbolSpec& sigma,
                                   const ComplexGridFunction& f);

struct QuadratureParams {
  double dtau = 0.25;
  double tmax = 64;
  double tmax_limit = 16384;
  double tail_tolerance = 1e-8;
};

struct QuadratureReport {
  double tmax = 0;
  double dtau = 0;
  /// max_x (1/2pi) sum_{T_max < |tau| <= 2 T_max} |F-hat(x, tau)| dtau.
  double tail = 0;
  std::size_t fft_length = 0;
  std::size_t tau_nodes = 0;
};

/// sigma_j(x, sqrt L) f = (1/2pi) int F-hat(x, tau) exp(-(1 - i tau) 2^{-2j} L) f dtau,
/// F(x, mu) = sigma_j(x, 2^j sqrt(mu)) e^mu, with a trapezoid rule in tau.
ComplexGridFunction apply_piece_quadrature(const SpectralDecomposition& dec, const SymbolSpec& piece, int j,
                                           const ComplexGridFunction& f, const QuadratureParams& params = {},
                                           QuadratureReport* report = nullptr);

/// Kernel K(x, y) of T with Tf(x) = h^n sum_y K(x, y) f(y).
Eigen::MatrixXcd kernel_matrix(std::shared_ptr<const SpectralDecomposition> dec, const SymbolSpec& sigma,
                               std::size_t cap = 8192);

/// K(x, y)(1 - phi(|x - y| / gamma)) with phi the smooth cutoff.
Eigen::MatrixXcd truncate_kernel(const Domain& d, const Eigen::MatrixXcd& K, double gamma);
ComplexGridFunction apply_truncated(const Domain& d, const Eigen::MatrixXcd& K_gamma, const ComplexGridFunction& f);

ComplexGridFunction commutator_apply(const GridFunction& b, const LinearOperator& T, const ComplexGridFunction& f);

/// One binary file per piece in the grid-function layout with a 2n header.
void write_kernel(const std::filesystem::path& path, const Domain& d, const Eigen::MatrixXcd& K);

}  // namespace spm

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Sparse>

#include "spm/grid.hpp"
#include "spm/potential.hpp"

namespace spm {

/// -Delta_h + diag(V) with Dirichlet boundary, second-order central differences.
struct DiscreteOperator {
  Domain domain;
  PotentialSpec potential;
  Eigen::SparseMatrix<double> matrix;
};

DiscreteOperator assemble(const Domain& d, const PotentialSpec& spec);

/// Eigenpairs of a DiscreteOperator. Columns of `vectors` are orthonormal in the
/// h^n-weighted inner product, so f = sum_k <f, u_k> u_k with <f, g> = h^n sum f conj(g).
class SpectralDecomposition {
 public:
  SpectralDecomposition(Domain domain, std::string key, Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors,
                        double residual, double gram_error);

  const Domain& domain() const { return domain_; }
  /// Cache key text: domain plus potential description.
  const std::string& key() const { return key_; }
  std::size_t size() const { return static_cast<std::size_t>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }
  double lambda_min() const { return eigenvalues_[0]; }
  double lambda_max() const { return eigenvalues_[eigenvalues_.size() - 1]; }
  /// max_k ||A u_k - lambda_k u_k|| / lambda_max for unit Euclidean vectors.
  double residual() const { return residual_; }
  /// max |h^n U^T U - I|.
  double gram_error() const { return gram_error_; }

  /// Coefficients <f, u_k>.
  Eigen::VectorXcd coefficients(const ComplexGridFunction& f) const;
  Eigen::MatrixXcd coefficients(const Eigen::MatrixXcd& columns) const;
  ComplexGridFunction synthesize(const Eigen::VectorXcd& c) const;

 private:
  Domain domain_;
  std::string key_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd vectors_;
  double residual_;
  double gram_error_;
};

struct DecomposeOptions {
  std::size_t size_cap = 32768;
  double residual_tolerance = 1e-8;
  double gram_tolerance = 1e-10;
  /// Cache directory; empty disables caching. Defaults to $SPM_CACHE_DIR when unset.
  std::optional<std::filesystem::path> cache_dir;
};

SpectralDecomposition decompose(const DiscreteOperator& op, const DecomposeOptions& opts = {});
std::shared_ptr<const SpectralDecomposition> decompose_shared(const Domain& d, const PotentialSpec& spec,
                                                              const DecomposeOptions& opts = {});

/// sum_k exp(-z lambda_k) <f, u_k> u_k.
ComplexGridFunction semigroup_apply(const SpectralDecomposition& dec, cplx z, const ComplexGridFunction& f);

/// sum_k m(sqrt(lambda_k)) <f, u_k> u_k.
ComplexGridFunction functional_calculus(const SpectralDecomposition& dec, const std::function<cplx(double)>& m,
                                        const ComplexGridFunction& f);
/// m(sqrt(lambda_k)) for every k, checked finite.
Eigen::VectorXcd spectral_values(const SpectralDecomposition& dec, const std::function<cplx(double)>& m);

/// p_t(., y): the semigroup applied to the node indicator of height h^{-n} at y.
GridFunction heat_kernel_column(const SpectralDecomposition& dec, double t, std::size_t y);

/// Stable 64-bit FNV-1a hash, used for cache file names.
std::uint64_t stable_hash(const std::string& text);

}  // namespace spm

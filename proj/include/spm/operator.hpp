#pragma once

#include <memory>

#include "spm/grid.hpp"

namespace spm {

/// Linear map on grid functions. The adjoint is taken in the h^n-weighted L^2
/// pairing, which for node-value matrices is the conjugate transpose.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual const Domain& domain() const = 0;
  virtual ComplexGridFunction apply(const ComplexGridFunction& f) const = 0;
  virtual ComplexGridFunction apply_adjoint(const ComplexGridFunction& g) const = 0;
  /// Node-value matrix A with (Tf)_x = sum_y A_xy f_y. Default: apply to unit vectors.
  virtual Eigen::MatrixXcd dense() const;

  ComplexGridFunction apply(const GridFunction& f) const { return apply(to_complex(f)); }
};

/// (Kf)(x) = h^n sum_y K(x, y) f(y).
class DenseKernelOperator : public LinearOperator {
 public:
  DenseKernelOperator(Domain d, Eigen::MatrixXcd kernel);
  const Domain& domain() const override { return domain_; }
  ComplexGridFunction apply(const ComplexGridFunction& f) const override;
  ComplexGridFunction apply_adjoint(const ComplexGridFunction& g) const override;
  Eigen::MatrixXcd dense() const override { return kernel_ * domain_.cell_volume(); }
  const Eigen::MatrixXcd& kernel() const { return kernel_; }

 private:
  Domain domain_;
  Eigen::MatrixXcd kernel_;
};

/// [b, T] f = b T f - T(b f).
class CommutatorOperator : public LinearOperator {
 public:
  CommutatorOperator(GridFunction b, std::shared_ptr<const LinearOperator> T);
  const Domain& domain() const override { return T_->domain(); }
  ComplexGridFunction apply(const ComplexGridFunction& f) const override;
  ComplexGridFunction apply_adjoint(const ComplexGridFunction& g) const override;
  Eigen::MatrixXcd dense() const override;

 private:
  GridFunction b_;
  std::shared_ptr<const LinearOperator> T_;
};

/// w^{1/2} T w^{-1/2}: its L^2 norm is the L^2(w) norm of T.
class WeightedSimilarity : public LinearOperator {
 public:
  WeightedSimilarity(std::shared_ptr<const LinearOperator> T, const GridFunction& weight);
  const Domain& domain() const override { return T_->domain(); }
  ComplexGridFunction apply(const ComplexGridFunction& f) const override;
  ComplexGridFunction apply_adjoint(const ComplexGridFunction& g) const override;
  Eigen::MatrixXcd dense() const override;

 private:
  std::shared_ptr<const LinearOperator> T_;
  Eigen::VectorXd sqrt_w_;
};

class IdentityOperator : public LinearOperator {
 public:
  explicit IdentityOperator(Domain d) : domain_(std::move(d)) {}
  const Domain& domain() const override { return domain_; }
  ComplexGridFunction apply(const ComplexGridFunction& f) const override { return f; }
  ComplexGridFunction apply_adjoint(const ComplexGridFunction& g) const override { return g; }

 private:
  Domain domain_;
};

/// Wraps a node-value matrix.
class MatrixOperator : public LinearOperator {
 public:
  MatrixOperator(Domain d, Eigen::MatrixXcd A);
  const Domain& domain() const override { return domain_; }
  ComplexGridFunction apply(const ComplexGridFunction& f) const override;
  ComplexGridFunction apply_adjoint(const ComplexGridFunction& g) const override;
  Eigen::MatrixXcd dense() const override { return A_; }

 private:
  Domain domain_;
  Eigen::MatrixXcd A_;
};

/// Pointwise product.
ComplexGridFunction multiply(const GridFunction& a, const ComplexGridFunction& f);

}  // namespace spm

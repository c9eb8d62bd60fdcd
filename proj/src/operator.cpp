#include "spm/operator.hpp"

namespace spm {

Eigen::MatrixXcd LinearOperator::dense() const {
  const Domain& d = domain();
  const auto N = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXcd A(N, N);
  ComplexGridFunction e(d);
  for (Eigen::Index j = 0; j < N; ++j) {
    e.values().setZero();
    e.values()[j] = 1;
    A.col(j) = apply(e).values();
  }
  return A;
}

ComplexGridFunction multiply(const GridFunction& a, const ComplexGridFunction& f) {
  return ComplexGridFunction(f.domain(), a.values().cast<cplx>().cwiseProduct(f.values()));
}

DenseKernelOperator::DenseKernelOperator(Domain d, Eigen::MatrixXcd kernel)
    : domain_(std::move(d)), kernel_(std::move(kernel)) {
  const auto N = static_cast<Eigen::Index>(domain_.size());
  if (kernel_.rows() != N || kernel_.cols() != N) fail(ErrorKind::InvalidArgument, "kernel shape does not match domain");
}

ComplexGridFunction DenseKernelOperator::apply(const ComplexGridFunction& f) const {
  return ComplexGridFunction(domain_, domain_.cell_volume() * (kernel_ * f.values()));
}

ComplexGridFunction DenseKernelOperator::apply_adjoint(const ComplexGridFunction& g) const {
  return ComplexGridFunction(domain_, domain_.cell_volume() * (kernel_.adjoint() * g.values()));
}

CommutatorOperator::CommutatorOperator(GridFunction b, std::shared_ptr<const LinearOperator> T)
    : b_(std::move(b)), T_(std::move(T)) {
  if (!(b_.domain() == T_->domain())) fail(ErrorKind::InvalidArgument, "b and T live on different domains");
}

ComplexGridFunction CommutatorOperator::apply(const ComplexGridFunction& f) const {
  ComplexGridFunction out = multiply(b_, T_->apply(f));
  out.values() -= T_->apply(multiply(b_, f)).values();
  return out;
}

ComplexGridFunction CommutatorOperator::apply_adjoint(const ComplexGridFunction& g) const {
  // ([b,T])^* g = T^*(b g) - b T^* g for real b
  ComplexGridFunction out = T_->apply_adjoint(multiply(b_, g));
  out.values() -= multiply(b_, T_->apply_adjoint(g)).values();
  return out;
}

Eigen::MatrixXcd CommutatorOperator::dense() const {
  const Eigen::MatrixXcd A = T_->dense();
  const Eigen::VectorXcd b = b_.values().cast<cplx>();
  return b.asDiagonal() * A - A * b.asDiagonal();
}

WeightedSimilarity::WeightedSimilarity(std::shared_ptr<const LinearOperator> T, const GridFunction& weight)
    : T_(std::move(T)) {
  if (weight.values().minCoeff() <= 0) fail(ErrorKind::InvalidWeight, "weight must be strictly positive");
  sqrt_w_ = weight.values().cwiseSqrt();
}

ComplexGridFunction WeightedSimilarity::apply(const ComplexGridFunction& f) const {
  ComplexGridFunction g(f.domain(), f.values().cwiseQuotient(sqrt_w_.cast<cplx>()));
  ComplexGridFunction out = T_->apply(g);
  out.values() = out.values().cwiseProduct(sqrt_w_.cast<cplx>());
  return out;
}

ComplexGridFunction WeightedSimilarity::apply_adjoint(const ComplexGridFunction& g) const {
  ComplexGridFunction u(g.domain(), g.values().cwiseProduct(sqrt_w_.cast<cplx>()));
  ComplexGridFunction out = T_->apply_adjoint(u);
  out.values() = out.values().cwiseQuotient(sqrt_w_.cast<cplx>());
  return out;
}

Eigen::MatrixXcd WeightedSimilarity::dense() const {
  const Eigen::VectorXcd s = sqrt_w_.cast<cplx>();
  const Eigen::VectorXcd si = sqrt_w_.cwiseInverse().cast<cplx>();
  return s.asDiagonal() * T_->dense() * si.asDiagonal();
}

MatrixOperator::MatrixOperator(Domain d, Eigen::MatrixXcd A) : domain_(std::move(d)), A_(std::move(A)) {
  const auto N = static_cast<Eigen::Index>(domain_.size());
  if (A_.rows() != N || A_.cols() != N) fail(ErrorKind::InvalidArgument, "matrix shape does not match domain");
}

ComplexGridFunction MatrixOperator::apply(const ComplexGridFunction& f) const {
  return ComplexGridFunction(domain_, A_ * f.values());
}

ComplexGridFunction MatrixOperator::apply_adjoint(const ComplexGridFunction& g) const {
  return ComplexGridFunction(domain_, A_.adjoint() * g.values());
}

}  // namespace spm

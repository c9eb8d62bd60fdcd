#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "spm/dyadic.hpp"
#include "spm/operator.hpp"
#include "spm/potential.hpp"
#include "spm/report.hpp"
#include "spm/spectral.hpp"
#include "spm/weights.hpp"

namespace spm {

struct NormOptions {
  /// Stop when the top Ritz residual is below tolerance * Ritz value.
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;
  std::uint64_t seed = 1;
};

struct NormResult {
  double value = 0;
  std::size_t iterations = 0;
  /// Maximiser in original coordinates, f = w^{-1/2} v, unit in L^2(w).
  Eigen::VectorXcd maximiser;
};

/// Largest singular value of w^{1/2} T w^{-1/2}: Lanczos with full
/// reorthogonalisation on its normal operator.
NormResult opnorm_weighted_l2_detail(const LinearOperator& T, const GridFunction& w, const NormOptions& opts = {});
double opnorm_weighted_l2(const LinearOperator& T, const GridFunction& w, const NormOptions& opts = {});

struct LpProbeOptions {
  /// Steps of the duality-map iteration started from the p = 2 maximiser.
  int iterations = 40;
  std::uint64_t seed = 11;
};

struct LpLowerBound {
  double value = 0;
  double best_probe_value = 0;
  std::size_t best_probe = 0;
  double iteration_value = 0;
};

/// Lower bound for ||T||_{L^p(w)}: best ratio over the first `budget` structured probes
/// (p = 2 maximiser, cube indicators, bumps, seeded noise) and a power-type
/// iteration through the duality map. Never the norm itself.
LpLowerBound opnorm_lp_lower_detail(const LinearOperator& T, const GridFunction& w, double p, std::size_t budget,
                                    const LpProbeOptions& opts = {});
double opnorm_lp_lower(const LinearOperator& T, const GridFunction& w, double p, std::size_t budget,
                       const LpProbeOptions& opts = {});

/// Slope of log norm against log [w]_{A_{p/r}^{rho,theta}} across the family; passes iff
/// slope <= max(1/(p-r), 1) + 0.2 and every ratio is finite.
StudyReport weighted_bound_study(const LinearOperator& T, const std::vector<WeightSpec>& weights, double p, double r,
                                 double theta, const CriticalFunctionTable& table, const CubeFamily& family,
                                 std::size_t probe_budget = 32);

struct SparseDominationResult {
  double C_S = 0;
  double violation_fraction = 0;
  std::size_t nodes = 0;
  SparseFamily family;
};

/// |T(f chi_{alpha Q})| <= C_S sum_P (avg_{alpha P} |f|^r)^{1/r} chi_P on Q's nodes.
/// C_S is the 99% quantile of the pointwise ratios; the violation fraction is taken at C_S (1 + 1e-9).
SparseDominationResult sparse_domination_check(const LinearOperator& T, const ComplexGridFunction& f,
                                               const DyadicSystem& system, int level, std::size_t index, double alpha,
                                               double r, const SparseOptions& opts = {});

/// Same with [b, T] on the left and both terms
/// |b - b_{R_P}| avg_{alpha P} |f| + avg_{alpha P} |(b - b_{R_P}) f| on the right.
SparseDominationResult commutator_sparse_domination_check(std::shared_ptr<const LinearOperator> T,
                                                          const GridFunction& b, const ComplexGridFunction& f,
                                                          const std::vector<DyadicSystem>& systems,
                                                          std::size_t system, int level, std::size_t index,
                                                          double alpha, const SparseOptions& opts = {});

/// Smallest N admissible in the commutator argument: M + (theta + M)(1 + l0).
double commutator_N_threshold(double M, double theta, double l0);

struct KernelDecayRow {
  double N = 0;
  double beta = 0;
  int gamma = 0;
  /// Per piece: max over x != y of the weighted kernel divided by 2^{j(n + gamma - beta)}.
  std::vector<double> C_j;
  double C = 0;
  /// max / min over pieces with C_j > 0.
  double spread = 0;
  bool pass = false;
};

std::vector<KernelDecayRow> kernel_decay_check(const Domain& d, const std::vector<Eigen::MatrixXcd>& kernels,
                                               const CriticalFunctionTable& table, const std::vector<double>& Ns,
                                               const std::vector<double>& betas, const std::vector<int>& gammas,
                                               double spread_limit = 10);

/// log2 of the unnormalised Gamma = N = beta = 0 constants against j.
std::pair<double, double> kernel_scaling_slope(const Domain& d, const std::vector<Eigen::MatrixXcd>& kernels);

struct HeatKernelFit {
  double t = 0;
  double C = 0;
};

/// max p_t(x,y) t^{n/2} e^{|x-y|^2/(c t)} (1 + sqrt t/rho(x) + sqrt t/rho(y))^N over node pairs.
std::vector<HeatKernelFit> heat_kernel_fit(const SpectralDecomposition& dec, const CriticalFunctionTable& table,
                                           const std::vector<double>& times, double N, double c = 5);

/// max over x != y of sum_j |K_j(x,y)| (1 + |x-y|/rho(x))^N |x-y|^n.
double summed_kernel_fit(const Domain& d, const std::vector<Eigen::MatrixXcd>& kernels,
                         const CriticalFunctionTable& table, double N);

/// Commutator norm over BMO norm against [w] across the family; exponent 2 max(1/(p-1), 1) + 0.3.
/// A zero BMO norm gives a trivial-b report that only checks the commutator vanishes.
StudyReport commutator_bound_check(std::shared_ptr<const LinearOperator> T, const GridFunction& b,
                                   const std::vector<WeightSpec>& weights, double p, double theta,
                                   const CriticalFunctionTable& table, const CubeFamily& family,
                                   std::size_t probe_budget = 32);

struct CompactnessOptions {
  std::vector<double> A_grid;
  std::vector<double> t_grid;
  std::vector<double> gamma_grid;
  std::size_t probes = 64;
  std::uint64_t seed = 2024;
  /// sigma_k / sigma_1 threshold checked at k = singular_index (1-based).
  std::size_t singular_index = 25;
  double singular_threshold = 0.1;
};

struct CompactnessResult {
  std::vector<double> singular;
  std::vector<double> tail;
  std::vector<double> translation;
  std::vector<double> truncation;
  double truncation_slope = 0;
  double truncation_residual = 0;
  StudyReport report;
};

/// 64 seeded unit-ball functions of L^2(w): band-limited sums and Gaussian bumps.
std::vector<ComplexGridFunction> kr_probes(const Domain& d, const GridFunction& w, std::size_t count,
                                           std::uint64_t seed);

/// Singular values, Kolmogorov-Riesz curves and truncation curve of [b, T] with T given by its kernel.
CompactnessResult compactness_probe(const Domain& d, const Eigen::MatrixXcd& kernel, const GridFunction& b,
                                    const GridFunction& w, const CompactnessOptions& opts);

/// ||M_w f||_{L^p(w)} <= p' ||f||_{L^p(w)} on seeded (f, w) pairs.
StudyReport dyadic_maximal_bound_study(const Domain& d, const std::vector<DyadicSystem>& systems,
                                       const std::vector<double>& ps, std::size_t trials, std::uint64_t seed);

}  // namespace spm

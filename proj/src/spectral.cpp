#include "spm/spectral.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

namespace spm {

DiscreteOperator assemble(const Domain& d, const PotentialSpec& spec) {
  const int n = d.dim();
  const double inv_h2 = 1.0 / (d.spacing() * d.spacing());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(d.size() * (2 * n + 1));
  for (std::size_t flat = 0; flat < d.size(); ++flat) {
    const Index3 idx = d.unflatten(flat);
    const auto row = static_cast<int>(flat);
    triplets.emplace_back(row, row, 2.0 * n * inv_h2 + eval_potential(spec, d.node(flat), n));
    for (int axis = 0; axis < n; ++axis) {
      for (int step : {-1, 1}) {
        Index3 nb = idx;
        nb[axis] += step;
        if (nb[axis] < 0 || nb[axis] >= d.points()) continue;
        triplets.emplace_back(row, static_cast<int>(d.flatten(nb)), -inv_h2);
      }
    }
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  A.setFromTriplets(triplets.begin(), triplets.end());
  return {d, spec, std::move(A)};
}

SpectralDecomposition::SpectralDecomposition(Domain domain, std::string key, Eigen::VectorXd eigenvalues,
                                             Eigen::MatrixXd vectors, double residual, double gram_error)
    : domain_(std::move(domain)),
      key_(std::move(key)),
      eigenvalues_(std::move(eigenvalues)),
      vectors_(std::move(vectors)),
      residual_(residual),
      gram_error_(gram_error) {}

Eigen::VectorXcd SpectralDecomposition::coefficients(const ComplexGridFunction& f) const {
  const Eigen::VectorXd re = vectors_.transpose() * f.values().real();
  const Eigen::VectorXd im = vectors_.transpose() * f.values().imag();
  Eigen::VectorXcd c(re.size());
  c.real() = re;
  c.imag() = im;
  return c * domain_.cell_volume();
}

Eigen::MatrixXcd SpectralDecomposition::coefficients(const Eigen::MatrixXcd& columns) const {
  Eigen::MatrixXcd c(vectors_.cols(), columns.cols());
  c.real() = vectors_.transpose() * columns.real();
  c.imag() = vectors_.transpose() * columns.imag();
  return c * domain_.cell_volume();
}

ComplexGridFunction SpectralDecomposition::synthesize(const Eigen::VectorXcd& c) const {
  Eigen::VectorXcd v(vectors_.rows());
  v.real() = vectors_ * c.real();
  v.imag() = vectors_ * c.imag();
  return ComplexGridFunction(domain_, std::move(v));
}

std::uint64_t stable_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string cache_key(const Domain& d, const PotentialSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << d.dim() << ";L=" << d.half_width() << ";M=" << d.points() << ";V=" << spec.describe();
  return os.str();
}

std::optional<std::filesystem::path> resolve_cache_dir(const DecomposeOptions& opts) {
  if (opts.cache_dir) {
    if (opts.cache_dir->empty()) return std::nullopt;
    return opts.cache_dir;
  }
  if (const char* env = std::getenv("SPM_CACHE_DIR"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

std::filesystem::path cache_file(const std::filesystem::path& dir, const std::string& key) {
  std::ostringstream name;
  name << "eig_" << std::hex << stable_hash(key) << ".bin";
  return dir / name.str();
}

std::optional<SpectralDecomposition> load_cached(const std::filesystem::path& file, const Domain& d,
                                                 const std::string& key) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint64_t key_len = 0;
  in.read(reinterpret_cast<char*>(&key_len), sizeof key_len);
  if (!in || key_len != key.size()) return std::nullopt;
  std::string stored(key_len, '\0');
  in.read(stored.data(), static_cast<std::streamsize>(key_len));
  if (!in || stored != key) return std::nullopt;
  double residual = 0, gram = 0;
  in.read(reinterpret_cast<char*>(&residual), sizeof residual);
  in.read(reinterpret_cast<char*>(&gram), sizeof gram);
  const auto N = static_cast<Eigen::Index>(d.size());
  Eigen::VectorXd lambda(N);
  Eigen::MatrixXd U(N, N);
  in.read(reinterpret_cast<char*>(lambda.data()), static_cast<std::streamsize>(sizeof(double) * N));
  in.read(reinterpret_cast<char*>(U.data()), static_cast<std::streamsize>(sizeof(double) * N * N));
  if (!in) return std::nullopt;
  return SpectralDecomposition(d, key, std::move(lambda), std::move(U), residual, gram);
}

void store_cached(const std::filesystem::path& file, const SpectralDecomposition& dec) {
  std::error_code ec;
  std::filesystem::create_directories(file.parent_path(), ec);
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;
    const std::uint64_t key_len = dec.key().size();
    out.write(reinterpret_cast<const char*>(&key_len), sizeof key_len);
    out.write(dec.key().data(), static_cast<std::streamsize>(key_len));
    const double residual = dec.residual(), gram = dec.gram_error();
    out.write(reinterpret_cast<const char*>(&residual), sizeof residual);
    out.write(reinterpret_cast<const char*>(&gram), sizeof gram);
    const auto N = static_cast<std::streamsize>(dec.size());
    out.write(reinterpret_cast<const char*>(dec.eigenvalues().data()), static_cast<std::streamsize>(sizeof(double)) * N);
    out.write(reinterpret_cast<const char*>(dec.vectors().data()), static_cast<std::streamsize>(sizeof(double)) * N * N);
    if (!out) return;
  }
  std::filesystem::rename(tmp, file, ec);
}

}  // namespace

SpectralDecomposition decompose(const DiscreteOperator& op, const DecomposeOptions& opts) {
  const Domain& d = op.domain;
  const std::size_t N = d.size();
  if (N > opts.size_cap) fail(ErrorKind::SizeLimit, "grid exceeds the eigensolver size cap");
  const std::string key = cache_key(d, op.potential);
  const auto dir = resolve_cache_dir(opts);
  if (dir) {
    if (auto cached = load_cached(cache_file(*dir, key), d, key)) return std::move(*cached);
  }

  const auto Ni = static_cast<Eigen::Index>(N);
  // Eigen's own solver: the system OpenBLAS kernels give wrong eigenvectors on some CPUs
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(op.matrix));
  if (solver.info() != Eigen::Success) fail(ErrorKind::SolverFailure, "symmetric eigensolver did not converge");
  Eigen::VectorXd lambda = solver.eigenvalues();
  Eigen::MatrixXd A = solver.eigenvectors();

  // sign convention: first clearly nonzero component positive
  for (Eigen::Index k = 0; k < Ni; ++k) {
    auto col = A.col(k);
    const double tol = 1e-10 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < Ni; ++i) {
      if (std::abs(col[i]) > tol) {
        if (col[i] < 0) col *= -1;
        break;
      }
    }
  }

  const double lmax = std::max(std::abs(lambda[0]), std::abs(lambda[Ni - 1]));
  Eigen::MatrixXd R = op.matrix * A;
  R -= A * lambda.asDiagonal();
  const double residual = R.colwise().norm().maxCoeff() / lmax;
  if (residual > opts.residual_tolerance) fail(ErrorKind::SolverFailure, "eigen-residual above tolerance");
  if (!(lambda[0] > 0)) fail(ErrorKind::SolverFailure, "operator is not positive definite");

  Eigen::MatrixXd G(Ni, Ni);
  G.setIdentity();
  G.noalias() -= A.transpose() * A;
  const double gram = G.cwiseAbs().maxCoeff();
  if (gram > opts.gram_tolerance) fail(ErrorKind::SolverFailure, "eigenvectors are not orthonormal");

  A *= 1.0 / std::sqrt(d.cell_volume());
  SpectralDecomposition dec(d, key, std::move(lambda), std::move(A), residual, gram);
  if (dir) store_cached(cache_file(*dir, key), dec);
  return dec;
}

std::shared_ptr<const SpectralDecomposition> decompose_shared(const Domain& d, const PotentialSpec& spec,
                                                              const DecomposeOptions& opts) {
  return std::make_shared<const SpectralDecomposition>(decompose(assemble(d, spec), opts));
}

ComplexGridFunction semigroup_apply(const SpectralDecomposition& dec, cplx z, const ComplexGridFunction& f) {
  if (z.real() < 0) fail(ErrorKind::UnstableTime, "semigroup time must have Re z >= 0");
  if (z == cplx(0)) return f;
  Eigen::VectorXcd c = dec.coefficients(f);
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(-z * dec.eigenvalues()[k]);
  return dec.synthesize(c);
}

Eigen::VectorXcd spectral_values(const SpectralDecomposition& dec, const std::function<cplx(double)>& m) {
  Eigen::VectorXcd mk(static_cast<Eigen::Index>(dec.size()));
  for (Eigen::Index k = 0; k < mk.size(); ++k) {
    mk[k] = m(std::sqrt(dec.eigenvalues()[k]));
    if (!std::isfinite(mk[k].real()) || !std::isfinite(mk[k].imag()))
      fail(ErrorKind::SymbolEvaluation, "multiplier is not finite on the spectrum");
  }
  return mk;
}

ComplexGridFunction functional_calculus(const SpectralDecomposition& dec, const std::function<cplx(double)>& m,
                                        const ComplexGridFunction& f) {
  const Eigen::VectorXcd mk = spectral_values(dec, m);
  return dec.synthesize(mk.cwiseProduct(dec.coefficients(f)));
}

GridFunction heat_kernel_column(const SpectralDecomposition& dec, double t, std::size_t y) {
  if (!(t > 0)) fail(ErrorKind::UnstableTime, "heat kernel needs t > 0");
  const Eigen::MatrixXd& U = dec.vectors();
  // <delta_y / h^n, u_k> = u_k(y)
  const Eigen::VectorXd c = U.row(static_cast<Eigen::Index>(y)).transpose().cwiseProduct(
      (-t * dec.eigenvalues().array()).exp().matrix());
  return GridFunction(dec.domain(), U * c);
}

}  // namespace spm

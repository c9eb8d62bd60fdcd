#include "spm/grid.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace spm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::EmptyRegion: return "empty region";
    case ErrorKind::InvalidWeight: return "invalid weight";
    case ErrorKind::DegenerateBall: return "degenerate ball";
    case ErrorKind::ResolutionTooCoarse: return "resolution too coarse";
    case ErrorKind::FitFailure: return "fit failure";
    case ErrorKind::SolverFailure: return "solver failure";
    case ErrorKind::SizeLimit: return "size limit";
    case ErrorKind::UnstableTime: return "unstable time";
    case ErrorKind::SymbolEvaluation: return "symbol evaluation";
    case ErrorKind::QuadratureUnderresolved: return "quadrature underresolved";
    case ErrorKind::TruncationBelowResolution: return "truncation below resolution";
    case ErrorKind::DivergentNorm: return "divergent norm";
    case ErrorKind::Boundary: return "boundary";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::InsufficientSpread: return "insufficient spread";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

double norm(const Point& x, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

double distance(const Point& x, const Point& y, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

Domain::Domain(int n, double half_width, int points_per_axis) : n_(n), L_(half_width), M_(points_per_axis) {
  if (n < 1 || n > 3) fail(ErrorKind::InvalidArgument, "dimension must be 1, 2 or 3");
  if (!(half_width > 0) || !std::isfinite(half_width)) fail(ErrorKind::InvalidArgument, "half-width must be positive");
  if (points_per_axis < 8) fail(ErrorKind::InvalidArgument, "need at least 8 points per axis");
  h_ = 2 * L_ / M_;
  cell_volume_ = std::pow(h_, n_);
  size_ = 1;
  for (int i = 0; i < n_; ++i) size_ *= static_cast<std::size_t>(M_);
}

Point Domain::node(std::size_t flat) const {
  const Index3 idx = unflatten(flat);
  Point p{0, 0, 0};
  for (int i = 0; i < n_; ++i) p[i] = coordinate(idx[i]);
  return p;
}

Index3 Domain::unflatten(std::size_t flat) const {
  Index3 idx{0, 0, 0};
  for (int i = n_ - 1; i >= 0; --i) {
    idx[i] = static_cast<int>(flat % static_cast<std::size_t>(M_));
    flat /= static_cast<std::size_t>(M_);
  }
  return idx;
}

std::size_t Domain::flatten(const Index3& idx) const {
  std::size_t flat = 0;
  for (int i = 0; i < n_; ++i) flat = flat * static_cast<std::size_t>(M_) + static_cast<std::size_t>(idx[i]);
  return flat;
}

bool Domain::operator==(const Domain& other) const {
  return n_ == other.n_ && L_ == other.L_ && M_ == other.M_;
}

ComplexGridFunction to_complex(const GridFunction& f) {
  return ComplexGridFunction(f.domain(), f.values().cast<cplx>());
}

GridFunction abs(const ComplexGridFunction& f) { return GridFunction(f.domain(), f.values().cwiseAbs()); }

GridFunction real_part(const ComplexGridFunction& f) { return GridFunction(f.domain(), f.values().real()); }

bool CellBox::empty(int n) const {
  for (int i = 0; i < n; ++i)
    if (hi[i] <= lo[i]) return true;
  return false;
}

std::size_t CellBox::count(int n) const {
  if (empty(n)) return 0;
  std::size_t c = 1;
  for (int i = 0; i < n; ++i) c *= static_cast<std::size_t>(hi[i] - lo[i]);
  return c;
}

bool CellBox::contains(const Index3& idx, int n) const {
  for (int i = 0; i < n; ++i)
    if (idx[i] < lo[i] || idx[i] >= hi[i]) return false;
  return true;
}

bool CellBox::contains(const CellBox& other, int n) const {
  for (int i = 0; i < n; ++i)
    if (other.lo[i] < lo[i] || other.hi[i] > hi[i]) return false;
  return true;
}

Point CellBox::center(const Domain& d) const {
  Point c{0, 0, 0};
  for (int i = 0; i < d.dim(); ++i) c[i] = -d.half_width() + 0.5 * (lo[i] + hi[i]) * d.spacing();
  return c;
}

double CellBox::side(const Domain& d) const {
  int m = 0;
  for (int i = 0; i < d.dim(); ++i) m = std::max(m, hi[i] - lo[i]);
  return m * d.spacing();
}

CellBox cells_within(const Domain& d, const Cube& q) {
  if (!(q.side > 0)) fail(ErrorKind::InvalidArgument, "cube side must be positive");
  CellBox box;
  const double h = d.spacing();
  const double L = d.half_width();
  for (int i = 0; i < d.dim(); ++i) {
    const double lo = (q.center[i] - 0.5 * q.side + L) / h;
    const double hi = (q.center[i] + 0.5 * q.side + L) / h;
    box.lo[i] = std::max(0, static_cast<int>(std::ceil(lo - 1e-9)));
    box.hi[i] = std::min(d.points(), static_cast<int>(std::floor(hi + 1e-9)));
  }
  if (box.empty(d.dim())) fail(ErrorKind::EmptyRegion, "region does not cover any cell of the domain");
  return box;
}

Cube to_cube(const Domain& d, const CellBox& box) { return Cube{box.center(d), box.side(d), std::nullopt}; }

CellBox whole(const Domain& d) {
  CellBox box;
  for (int i = 0; i < d.dim(); ++i) {
    box.lo[i] = 0;
    box.hi[i] = d.points();
  }
  return box;
}

CellBox dilate(const Domain& d, const CellBox& box, double alpha) {
  CellBox out;
  for (int i = 0; i < d.dim(); ++i) {
    const double c = 0.5 * (box.lo[i] + box.hi[i]);
    const double half = 0.5 * alpha * (box.hi[i] - box.lo[i]);
    // node j has centre j + 1/2 in cell units
    out.lo[i] = std::max(0, static_cast<int>(std::ceil(c - half - 0.5 - 1e-9)));
    out.hi[i] = std::min(d.points(), static_cast<int>(std::floor(c + half - 0.5 + 1e-9)) + 1);
  }
  return out;
}

double integrate(const GridFunction& f) { return f.domain().cell_volume() * f.values().sum(); }

double integrate(const GridFunction& f, const CellBox& region) {
  const Domain& d = f.domain();
  if (region.empty(d.dim())) fail(ErrorKind::EmptyRegion, "empty integration region");
  double s = 0;
  for_each_cell(region, d.dim(), [&](const Index3& idx) { s += f[d.flatten(idx)]; });
  return d.cell_volume() * s;
}

double integrate(const GridFunction& f, const Cube& region) {
  return integrate(f, cells_within(f.domain(), region));
}

double covered_volume(const Domain& d, const CellBox& region) {
  return static_cast<double>(region.count(d.dim())) * d.cell_volume();
}

namespace {

void check_weight(const GridFunction& w) {
  if (w.values().minCoeff() <= 0) fail(ErrorKind::InvalidWeight, "weight must be strictly positive");
}

template <typename Vec>
double weighted_norm(const Domain& d, const Vec& absf, double p, const GridFunction& w) {
  if (!(p >= 1) || !std::isfinite(p)) fail(ErrorKind::InvalidArgument, "exponent must be finite and >= 1");
  check_weight(w);
  if (!(d == w.domain())) fail(ErrorKind::InvalidArgument, "weight lives on another domain");
  double s = 0;
  for (Eigen::Index i = 0; i < absf.size(); ++i) s += std::pow(absf[i], p) * w.values()[i];
  return std::pow(d.cell_volume() * s, 1.0 / p);
}

}  // namespace

double lp_norm_weighted(const GridFunction& f, double p, const GridFunction& weight) {
  return weighted_norm(f.domain(), f.values().cwiseAbs().eval(), p, weight);
}

double lp_norm_weighted(const ComplexGridFunction& f, double p, const GridFunction& weight) {
  return weighted_norm(f.domain(), f.values().cwiseAbs().eval(), p, weight);
}

double lp_norm(const ComplexGridFunction& f, double p) {
  const Eigen::VectorXd a = f.values().cwiseAbs();
  double s = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::pow(a[i], p);
  return std::pow(f.domain().cell_volume() * s, 1.0 / p);
}

double cube_average(const GridFunction& f, const CellBox& q) {
  return integrate(f, q) / covered_volume(f.domain(), q);
}

double cube_average(const GridFunction& f, const Cube& q) { return cube_average(f, cells_within(f.domain(), q)); }

namespace {

template <typename Scalar>
BasicGridFunction<Scalar> translate_impl(const BasicGridFunction<Scalar>& f, const Point& t) {
  const Domain& d = f.domain();
  const int n = d.dim();
  if (norm(t, n) >= d.half_width()) fail(ErrorKind::InvalidArgument, "translation must be shorter than L");
  // fractional index shift per axis, snapped to integers when exact
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const double s = t[i] / d.spacing();
    const double r = std::round(s);
    const double u = std::abs(s - r) < 1e-9 ? r : s;
    base[i] = static_cast<int>(std::floor(u));
    frac[i] = u - base[i];
  }
  typename BasicGridFunction<Scalar>::Vector out(static_cast<Eigen::Index>(d.size()));
  const int corners = 1 << n;
  for (std::size_t flat = 0; flat < d.size(); ++flat) {
    const Index3 idx = d.unflatten(flat);
    Scalar acc{};
    for (int c = 0; c < corners; ++c) {
      double w = 1;
      Index3 j{0, 0, 0};
      bool inside = true;
      for (int i = 0; i < n; ++i) {
        const int bit = (c >> i) & 1;
        w *= bit ? frac[i] : 1 - frac[i];
        j[i] = idx[i] + base[i] + bit;
        if (j[i] < 0 || j[i] >= d.points()) inside = false;
      }
      if (w != 0 && inside) acc += w * f[d.flatten(j)];
    }
    out[static_cast<Eigen::Index>(flat)] = acc;
  }
  return BasicGridFunction<Scalar>(d, std::move(out));
}

}  // namespace

GridFunction translate(const GridFunction& f, const Point& t) { return translate_impl(f, t); }
ComplexGridFunction translate(const ComplexGridFunction& f, const Point& t) { return translate_impl(f, t); }

PrefixSum::PrefixSum(const GridFunction& f) : domain_(f.domain()) {
  const int n = domain_.dim();
  const std::size_t M1 = static_cast<std::size_t>(domain_.points()) + 1;
  stride_[0] = stride_[1] = stride_[2] = 0;
  std::size_t total = 1;
  for (int i = n - 1; i >= 0; --i) {
    stride_[i] = total;
    total *= M1;
  }
  table_.assign(total, 0.0);
  // table(i+1, j+1, k+1) = sum over cells with indices <= (i, j, k)
  for (std::size_t flat = 0; flat < domain_.size(); ++flat) {
    const Index3 idx = domain_.unflatten(flat);
    std::size_t t = 0;
    for (int i = 0; i < n; ++i) t += (static_cast<std::size_t>(idx[i]) + 1) * stride_[i];
    table_[t] = f[flat];
  }
  for (int axis = 0; axis < n; ++axis) {
    for (std::size_t t = 0; t < total; ++t) {
      const std::size_t coord = (t / stride_[axis]) % M1;
      if (coord > 0) table_[t] += table_[t - stride_[axis]];
    }
  }
}

double PrefixSum::sum(const CellBox& box) const {
  const int n = domain_.dim();
  if (box.empty(n)) return 0;
  double s = 0;
  for (int c = 0; c < (1 << n); ++c) {
    std::size_t t = 0;
    int sign = 1;
    for (int i = 0; i < n; ++i) {
      if ((c >> i) & 1) {
        t += static_cast<std::size_t>(box.lo[i]) * stride_[i];
        sign = -sign;
      } else {
        t += static_cast<std::size_t>(box.hi[i]) * stride_[i];
      }
    }
    s += sign * table_[t];
  }
  return s;
}

double PrefixSum::average(const CellBox& box) const {
  return sum(box) / static_cast<double>(box.count(domain_.dim()));
}

namespace io {

namespace {

void write_header(std::ofstream& out, int n, double L, int M, int components) {
  const std::int32_t n32 = n, m32 = M, c32 = components;
  out.write(reinterpret_cast<const char*>(&n32), sizeof n32);
  out.write(reinterpret_cast<const char*>(&L), sizeof L);
  out.write(reinterpret_cast<const char*>(&m32), sizeof m32);
  out.write(reinterpret_cast<const char*>(&c32), sizeof c32);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_binary(const std::filesystem::path& path, const GridFunction& f) {
  auto out = open_out(path);
  const Domain& d = f.domain();
  write_header(out, d.dim(), d.half_width(), d.points(), 1);
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(sizeof(double) * f.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

void write_binary(const std::filesystem::path& path, const ComplexGridFunction& f) {
  const Domain& d = f.domain();
  write_binary_raw(path, d.dim(), d.half_width(), d.points(),
                   std::span<const cplx>(f.values().data(), f.size()), true);
}

void write_binary_raw(const std::filesystem::path& path, int dim, double L, int M, std::span<const cplx> values,
                      bool complex_values) {
  auto out = open_out(path);
  write_header(out, dim, L, M, complex_values ? 2 : 1);
  for (const cplx& v : values) {
    const double re = v.real(), im = v.imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof re);
    if (complex_values) out.write(reinterpret_cast<const char*>(&im), sizeof im);
  }
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

GridFunction read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  std::int32_t n = 0, M = 0, comps = 0;
  double L = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&L), sizeof L);
  in.read(reinterpret_cast<char*>(&M), sizeof M);
  in.read(reinterpret_cast<char*>(&comps), sizeof comps);
  if (!in || comps != 1) fail(ErrorKind::Io, "not a real grid function file: " + path.string());
  Domain d(n, L, M);
  Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * d.size()));
  if (!in) fail(ErrorKind::Io, "truncated grid function file: " + path.string());
  return GridFunction(d, std::move(v));
}

void write_csv(const std::filesystem::path& path, const GridFunction& f) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  const Domain& d = f.domain();
  out.precision(17);
  out << "n,L,M\n" << d.dim() << ',' << d.half_width() << ',' << d.points() << '\n';
  for (std::size_t i = 0; i < f.size(); ++i) out << f[i] << '\n';
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

GridFunction read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "n,L,M") fail(ErrorKind::Io, "missing CSV header in " + path.string());
  std::getline(in, line);
  std::stringstream ss(line);
  int n = 0, M = 0;
  double L = 0;
  char comma = 0;
  ss >> n >> comma >> L >> comma >> M;
  Domain d(n, L, M);
  Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(in >> v[i])) fail(ErrorKind::Io, "truncated CSV grid function " + path.string());
  }
  return GridFunction(d, std::move(v));
}

}  // namespace io

}  // namespace spm

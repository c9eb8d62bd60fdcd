#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spm/error.hpp"

namespace spm {

using cplx = std::complex<double>;
using Point = std::array<double, 3>;
using Index3 = std::array<int, 3>;

double norm(const Point& x, int n);
double distance(const Point& x, const Point& y, int n);

/// Box [-L, L]^n sampled at M cell centres per axis, x_i = -L + (i + 1/2) h.
class Domain {
 public:
  Domain(int n, double half_width, int points_per_axis);

  int dim() const { return n_; }
  double half_width() const { return L_; }
  int points() const { return M_; }
  double spacing() const { return h_; }
  /// Volume of one cell, h^n.
  double cell_volume() const { return cell_volume_; }
  std::size_t size() const { return size_; }

  double coordinate(int i) const { return -L_ + (i + 0.5) * h_; }
  Point node(std::size_t flat) const;
  Index3 unflatten(std::size_t flat) const;
  std::size_t flatten(const Index3& idx) const;

  bool operator==(const Domain& other) const;

 private:
  int n_;
  double L_;
  int M_;
  double h_;
  double cell_volume_;
  std::size_t size_;
};

/// One scalar per node, row-major with the first axis slowest.
template <typename Scalar>
class BasicGridFunction {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit BasicGridFunction(const Domain& domain)
      : domain_(domain), values_(Vector::Zero(static_cast<Eigen::Index>(domain.size()))) {}

  BasicGridFunction(const Domain& domain, Vector values) : domain_(domain), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != domain_.size())
      fail(ErrorKind::InvalidArgument, "grid function size does not match domain");
    if (!values_.allFinite()) fail(ErrorKind::InvalidArgument, "grid function has non-finite values");
  }

  template <typename F>
  static BasicGridFunction sample(const Domain& domain, F&& f) {
    Vector v(static_cast<Eigen::Index>(domain.size()));
    for (std::size_t i = 0; i < domain.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(domain.node(i));
    return BasicGridFunction(domain, std::move(v));
  }

  const Domain& domain() const { return domain_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  std::size_t size() const { return domain_.size(); }

  Scalar operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  Scalar& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  Domain domain_;
  Vector values_;
};

using GridFunction = BasicGridFunction<double>;
using ComplexGridFunction = BasicGridFunction<cplx>;

ComplexGridFunction to_complex(const GridFunction& f);
GridFunction abs(const ComplexGridFunction& f);
GridFunction real_part(const ComplexGridFunction& f);

/// Axis-aligned block of whole cells, [lo, hi) in node indices per axis.
struct CellBox {
  Index3 lo{0, 0, 0};
  Index3 hi{1, 1, 1};

  bool empty(int n) const;
  std::size_t count(int n) const;
  int extent(int axis) const { return hi[axis] - lo[axis]; }
  bool contains(const Index3& idx, int n) const;
  bool contains(const CellBox& other, int n) const;
  Point center(const Domain& d) const;
  /// Largest side length in length units.
  double side(const Domain& d) const;

  bool operator==(const CellBox&) const = default;
};

/// Identifies a cube inside a dyadic system.
struct DyadicTag {
  int system = 0;
  int level = 0;
  std::size_t index = 0;
};

/// Cube with centre x_Q and side r_Q.
struct Cube {
  Point center{0, 0, 0};
  double side = 1;
  std::optional<DyadicTag> tag;
};

/// Cells whose extent lies entirely in Q intersected with the box.
CellBox cells_within(const Domain& d, const Cube& q);
Cube to_cube(const Domain& d, const CellBox& box);
/// Cells of the box itself.
CellBox whole(const Domain& d);
/// Cube with the same centre and alpha times the side, as the cells whose centres
/// lie in the (closed) dilated cube, clipped to the box.
CellBox dilate(const Domain& d, const CellBox& box, double alpha);

template <typename F>
void for_each_cell(const CellBox& box, int n, F&& f) {
  if (box.empty(n)) return;
  Index3 idx{0, 0, 0};
  for (idx[0] = box.lo[0]; idx[0] < box.hi[0]; ++idx[0]) {
    if (n == 1) {
      f(idx);
      continue;
    }
    for (idx[1] = box.lo[1]; idx[1] < box.hi[1]; ++idx[1]) {
      if (n == 2) {
        f(idx);
        continue;
      }
      for (idx[2] = box.lo[2]; idx[2] < box.hi[2]; ++idx[2]) f(idx);
    }
  }
}

double integrate(const GridFunction& f);
double integrate(const GridFunction& f, const Cube& region);
double integrate(const GridFunction& f, const CellBox& region);
/// Volume of the cells counted by integrate over the region.
double covered_volume(const Domain& d, const CellBox& region);

/// (integral |f|^p w)^{1/p}.
double lp_norm_weighted(const GridFunction& f, double p, const GridFunction& weight);
double lp_norm_weighted(const ComplexGridFunction& f, double p, const GridFunction& weight);
double lp_norm(const ComplexGridFunction& f, double p);

double cube_average(const GridFunction& f, const Cube& q);
double cube_average(const GridFunction& f, const CellBox& q);

/// f(. + t) by multilinear interpolation, zero outside the box.
GridFunction translate(const GridFunction& f, const Point& t);
ComplexGridFunction translate(const ComplexGridFunction& f, const Point& t);

/// Summed-area table for O(2^n) box sums.
class PrefixSum {
 public:
  explicit PrefixSum(const GridFunction& f);
  double sum(const CellBox& box) const;
  double average(const CellBox& box) const;

 private:
  Domain domain_;
  std::vector<double> table_;
  std::size_t stride_[3];
};

namespace io {

/// Binary layout: int32 n, float64 L, int32 M, int32 components (1 real, 2 complex),
/// then row-major values (complex interleaved).
void write_binary(const std::filesystem::path& path, const GridFunction& f);
void write_binary(const std::filesystem::path& path, const ComplexGridFunction& f);
/// Raw array variant used for kernels: header dimension is arbitrary, values are M^dim.
void write_binary_raw(const std::filesystem::path& path, int dim, double L, int M,
                      std::span<const cplx> values, bool complex_values);
GridFunction read_binary(const std::filesystem::path& path);

/// CSV layout: "n,L,M" header line, the header values, then one value per line.
void write_csv(const std::filesystem::path& path, const GridFunction& f);
GridFunction read_csv(const std::filesystem::path& path);

}  // namespace io

}  // namespace spm

// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ksl/error.hpp"

namespace ksl {

using Point = std::array<double, 3>;

/// Uniform cell-centred tensor mesh on the box (0,L0)x(0,L1)x(0,L2).
///
/// Axes beyond `dim` are collapsed: one cell, unit spacing, and they do not
/// contribute to the volume. Cells are numbered lexicographically with the
/// first axis running fastest.
class Grid {
public:
  Grid() = default;

  int dim() const { return dim_; }
  double extent(int axis) const { return extent_[axis]; }
  int cells(int axis) const { return cells_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  double volume() const { return volume_; }
  double cell_volume() const { return cell_volume_; }
  std::size_t size() const { return size_; }
  double min_spacing() const;
  double max_extent() const;

  /// Cell-centre coordinate of lexicographic index `idx`.
  Point center(std::size_t idx) const;
  std::array<int, 3> unravel(std::size_t idx) const;
  std::size_t ravel(int i0, int i1, int i2) const {
    return static_cast<std::size_t>(i0) + stride_[1] * i1 + stride_[2] * i2;
  }

  bool operator==(const Grid&) const = default;

  friend Grid build_grid(int dim, std::span<const double> extents,
                         std::span<const int> cells);

private:
  int dim_ = 0;
  std::array<double, 3> extent_{1.0, 1.0, 1.0};
  std::array<int, 3> cells_{1, 1, 1};
  std::array<double, 3> h_{1.0, 1.0, 1.0};
  std::array<std::size_t, 3> stride_{1, 1, 1};
  double volume_ = 0.0;
  double cell_volume_ = 0.0;
  std::size_t size_ = 0;
};

/// Throws ksl::Error(InvalidArgument) for dim outside 1..3, non-positive
/// extents or fewer than four cells on an axis.
Grid build_grid(int dim, std::span<const double> extents,
                std::span<const int> cells);
Grid build_grid(int dim, std::initializer_list<double> extents,
                std::initializer_list<int> cells);

/// Scalar cell data on a Grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0)
      : grid(g), values(g.size(), fill) {}
  Field(const Grid& g, std::vector<double> v);

  static Field sample(const Grid& g, const std::function<double(const Point&)>& f);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double min() const;
  double max() const;
  double max_abs() const;
  bool all_finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
/// Pointwise product.
Field hadamard(const Field& a, const Field& b);
Field map(const Field& a, const std::function<double(double)>& f);

/// Face-staggered vector data: component k lives on the faces normal to axis
/// k, (cells_k + 1) faces per grid line. Boundary faces carry the no-flux value.
struct FaceVector {
  Grid grid;
  std::array<std::vector<double>, 3> comp;

  explicit FaceVector(const Grid& g);
  std::size_t face_index(int axis, int i0, int i1, int i2) const;
};

/// Cell-centred vector data, one Field per active axis.
using VectorField = std::vector<Field>;

// Midpoint quadrature and norms.
double integrate(const Field& f);
double inner(const Field& f, const Field& g);
/// (integrate |f|^p)^(1/p); p = +infinity gives the max norm. Rejects p < 1.
double lp_norm(const Field& f, double p);

/// Centred differences at cell centres with mirrored ghosts.
VectorField gradient(const Field& f);
/// One-sided differences across interior faces; boundary faces are zero.
FaceVector face_gradient(const Field& f);
/// Flux-form divergence of face data; divergence(face_gradient(f)) equals
/// laplacian(f) exactly.
Field divergence(const FaceVector& flux);
Field laplacian(const Field& f);
/// Face inner product sum_k sum_faces a_k b_k |cell|.
double face_inner(const FaceVector& a, const FaceVector& b);

/// Pointwise |grad f|^2 as the average of the squared face differences
/// adjacent to each cell, so integrate(grad_sq(f)) == face_inner(Df, Df).
Field grad_sq(const Field& f);
/// Pointwise |grad f|^2 from the centred gradient.
Field centered_grad_sq(const Field& f);
/// Pointwise |D^2 f|^2 with second differences on the diagonal and centred
/// mixed differences off it.
Field hessian_sq(const Field& f);

/// Closed-form spectrum of the 1D Neumann three-point Laplacian on N cells:
/// lambda_j = (4/h^2) sin^2(j pi / (2N)), e_j(x_i) ~ cos(j pi (i+1/2) / N),
/// orthonormal under sum_i f_i g_i h.
class NeumannBasis1D {
public:
  NeumannBasis1D() = default;
  NeumannBasis1D(int cells, double extent);

  int size() const { return n_; }
  double spacing() const { return h_; }
  double eigenvalue(int j) const { return lambda_[j]; }
  /// e_j evaluated at cell i.
  double operator()(int j, int i) const { return modes_[static_cast<std::size_t>(j) * n_ + i]; }

private:
  int n_ = 0;
  double h_ = 1.0;
  std::vector<double> lambda_;
  std::vector<double> modes_;
};

struct EigenPair {
  double value = 0.0;
  std::array<int, 3> index{0, 0, 0};
  Field field;
};

/// The k smallest eigenpairs of -laplacian on g, ascending, ties broken by
/// lexicographic mode index. Rejects k > g.size().
std::vector<EigenPair> neumann_eigenpairs(const Grid& g, std::size_t k);

/// Mode indices of the full tensor spectrum sorted like neumann_eigenpairs.
std::vector<std::array<int, 3>> sorted_mode_indices(const Grid& g);
double mode_eigenvalue(const Grid& g, const std::array<int, 3>& index);
Field mode_field(const Grid& g, const std::array<int, 3>& index);

struct DomainConstants {
  double c_p = 0.0;
  double lambda1 = 0.0;
  /// Sampled lower bound only; zero when not estimated.
  double c_omega = 0.0;
  bool c_omega_is_lower_bound = true;
};

/// Smallest positive Neumann eigenvalue of the discrete Laplacian.
double first_positive_eigenvalue(const Grid& g);
double poincare_constant(const Grid& g);

/// Running maximum of int |grad w|^4 / int (w^2 + |lap w|^2) over `samples`
/// random combinations (standard normal coefficients) of the lowest 20
/// eigenfields. 3D only.
double embedding_constant_estimate(const Grid& g, int samples, std::uint64_t seed);
std::vector<double> embedding_constant_trace(const Grid& g, int samples, std::uint64_t seed);
double embedding_ratio(const Field& w);

DomainConstants domain_constants(const Grid& g, int samples = 0, std::uint64_t seed = 0);

}  // namespace ksl

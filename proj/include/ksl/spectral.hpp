// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "ksl/grid.hpp"

namespace ksl {

/// Exact eigenbasis of the discrete Neumann Laplacian on a tensor grid.
///
/// Transforms act axis by axis with the dense 1D cosine bases, so the modal
/// coefficients use the same lexicographic layout as cell values. A kernel
/// built with `lowest = K` keeps only the K smallest modes (sorted as in
/// neumann_eigenpairs) and reports itself incomplete.
class SpectralKernel {
public:
  explicit SpectralKernel(const Grid& g, std::optional<std::size_t> lowest = std::nullopt);

  const Grid& grid() const { return grid_; }
  bool complete() const { return complete_; }
  std::size_t retained() const { return retained_; }

  /// Coefficients <f, e_j> under the midpoint inner product.
  std::vector<double> to_modal(const Field& f) const;
  Field from_modal(std::vector<double> coeffs) const;

  /// Eigenvalue of -laplacian for the mode stored at `pos`.
  double eigenvalue(std::size_t pos) const { return lambda_[pos]; }
  const std::vector<double>& eigenvalues() const { return lambda_; }

  /// sum_j m(lambda_j) <f,e_j> e_j over the retained modes.
  Field apply_multiplier(const Field& f, const std::function<double(double)>& m) const;

  /// exp(t (laplacian - shift)) f. Rejects t < 0.
  Field semigroup(double t, const Field& f, double shift = 0.0) const;

  /// Solves (1 + dt*shift) x - dt*laplacian(x) = rhs.
  Field solve_shifted(const Field& rhs, double dt, double shift) const;

private:
  void transform(std::vector<double>& data, bool forward) const;

  Grid grid_;
  std::array<NeumannBasis1D, 3> basis_;
  std::vector<double> lambda_;
  std::vector<unsigned char> keep_;
  bool complete_ = true;
  std::size_t retained_ = 0;
};

}  // namespace ksl

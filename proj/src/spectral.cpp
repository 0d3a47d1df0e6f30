// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/spectral.hpp"

#include <cmath>

namespace ksl {

SpectralKernel::SpectralKernel(const Grid& g, std::optional<std::size_t> lowest)
    : grid_(g), lambda_(g.size()), keep_(g.size(), 1) {
  for (int a = 0; a < g.dim(); ++a) basis_[a] = NeumannBasis1D(g.cells(a), g.extent(a));
  for (std::size_t i = 0; i < g.size(); ++i) lambda_[i] = mode_eigenvalue(g, g.unravel(i));
  retained_ = g.size();
  if (lowest && *lowest < g.size()) {
    complete_ = false;
    retained_ = *lowest;
    std::fill(keep_.begin(), keep_.end(), 0);
    auto order = sorted_mode_indices(g);
    for (std::size_t j = 0; j < *lowest; ++j)
      keep_[g.ravel(order[j][0], order[j][1], order[j][2])] = 1;
  }
}

void SpectralKernel::transform(std::vector<double>& data, bool forward) const {
  const Grid& g = grid_;
  std::vector<double> line_in, line_out;
  for (int a = 0; a < g.dim(); ++a) {
    const NeumannBasis1D& b = basis_[a];
    const int n = b.size();
    const std::size_t stride = g.stride(a);
    const double w = forward ? b.spacing() : 1.0;
    line_in.resize(n);
    line_out.resize(n);
    // Lines along axis a start at every index whose a-coordinate is zero.
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < data.size(); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        const std::size_t start = base + off;
        for (int i = 0; i < n; ++i) line_in[i] = data[start + i * stride];
        if (forward) {
          for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += b(j, i) * line_in[i];
            line_out[j] = s * w;
          }
        } else {
          for (int i = 0; i < n; ++i) line_out[i] = 0.0;
          for (int j = 0; j < n; ++j) {
            const double c = line_in[j];
            if (c == 0.0) continue;
            for (int i = 0; i < n; ++i) line_out[i] += b(j, i) * c;
          }
        }
        for (int i = 0; i < n; ++i) data[start + i * stride] = line_out[i];
      }
    }
  }
}

std::vector<double> SpectralKernel::to_modal(const Field& f) const {
  require(f.grid == grid_, "field does not live on the kernel grid");
  std::vector<double> c = f.values;
  transform(c, true);
  if (!complete_)
    for (std::size_t i = 0; i < c.size(); ++i)
      if (!keep_[i]) c[i] = 0.0;
  return c;
}

Field SpectralKernel::from_modal(std::vector<double> coeffs) const {
  require(coeffs.size() == grid_.size(), "modal vector has the wrong length");
  transform(coeffs, false);
  return Field(grid_, std::move(coeffs));
}

Field SpectralKernel::apply_multiplier(const Field& f,
                                       const std::function<double(double)>& m) const {
  auto c = to_modal(f);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= m(lambda_[i]);
  return from_modal(std::move(c));
}

Field SpectralKernel::semigroup(double t, const Field& f, double shift) const {
  require(t >= 0.0, "semigroup time must be nonnegative");
  if (t == 0.0 && complete_) return f;
  auto c = to_modal(f);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (lambda_[i] == 0.0 && shift == 0.0) continue;  // mean is invariant
    c[i] *= std::exp(-(lambda_[i] + shift) * t);
  }
  return from_modal(std::move(c));
}

Field SpectralKernel::solve_shifted(const Field& rhs, double dt, double shift) const {
  auto c = to_modal(rhs);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] /= 1.0 + dt * (lambda_[i] + shift);
  return from_modal(std::move(c));
}

}  // namespace ksl

// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ksl/functionals.hpp"
#include "ksl/spectral.hpp"

namespace ksl {

/// exp(t (laplacian - shift)) f; shift = 1 gives the v-equation semigroup.
Field semigroup_apply(const SpectralKernel& k, double t, const Field& f, double shift = 0.0);

/// Pointwise sup of |grad f| from the face-averaged squared differences.
double grad_sup(const Field& f);

/// Exponent of tau in the L^q -> W^{1,inf} smoothing estimate: 1/2 + n/(2q).
double smoothing_exponent(int n, double q);
/// Exponent -(1/2 + n/(2q)) q/(q-1) of the time integral behind C4; the
/// integral is finite iff it exceeds -1, equivalently q > n + 2.
double c4_exponent(int n, double q);
bool c4_finite(int n, double q);

struct SmoothingOptions {
  int trials = 64;
  int taus = 12;
  /// tau range; tau_min defaults to 10 h^2 when zero.
  double tau_min = 0.0;
  double tau_max = 1.0;
  std::uint64_t seed = 1;
};

struct SmoothingFit {
  double q = 0.0;
  int dim = 0;
  double alpha_expected = 0.0;
  /// ratio ~ c_fit tau^(-alpha_fit) by least squares in log-log.
  double alpha_fit = 0.0;
  double c_fit = 0.0;
  double rel_error = 0.0;
  /// sup over smooth fields of ||grad e^{tau lap} w||_inf / ||grad w||_inf.
  double contraction = 0.0;
  bool c4_finite = false;
  std::vector<double> tau;
  std::vector<double> ratio;
};

/// Sup over random Gaussian bumps (random centres, log-uniform widths in
/// [h, max extent / 4]) of ||grad e^{tau lap} w||_inf / ||w||_q on a
/// log-spaced tau grid. Requires a complete kernel.
SmoothingFit smoothing_fit(const SpectralKernel& k, double q, const SmoothingOptions& opt = {});

struct DuhamelResult {
  double max_deviation = 0.0;
  double worst_time = 0.0;
  std::vector<double> t;
  std::vector<double> deviation;
};

/// Rebuilds v from the u snapshots through
///   v(t) = e^{t(lap-1)} v(t_0) + int e^{(t-s)(lap-1)} u(s) ds
/// with the trapezoid rule in s, and compares with the stored v in the
/// relative max norm ||v_rec - v||_inf / max(1, ||v||_inf).
DuhamelResult duhamel_check(const SpectralKernel& k, const Trace& tr);

}  // namespace ksl

// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ksl/functionals.hpp"
#include "ksl/grid.hpp"

namespace ksl {

/// p(x) = nu - eta x + A (1 + 1/(4 nu)) x^3 + 4 kappa_hat^2 |Omega| / (C_P mu^2)
struct OdiPolynomial {
  double nu = 0.0;
  double eta = 0.0;
  double a_const = 0.0;
  double kappa_hat = 0.0;
  double c_p = 0.0;
  double mu = 0.0;
  double omega_vol = 0.0;

  /// A (1 + 1/(4 nu)).
  double lead() const { return a_const * (1.0 + 1.0 / (4.0 * nu)); }
  double constant() const { return nu + 4.0 * kappa_hat * kappa_hat * omega_vol / (c_p * mu * mu); }
  double derivative(double x) const { return -eta + 3.0 * lead() * x * x; }
  /// Rejects non-positive nu, a_const, c_p, mu or omega_vol.
  void validate() const;
};

double p_eval(const OdiPolynomial& p, double x);
/// sqrt(eta / (3 A (1 + 1/(4 nu)))).
double local_min(const OdiPolynomial& p);
/// sqrt(4 / (A (1 + 1/(4 nu)))).
double root_upper(const OdiPolynomial& p);
/// Largest positive root by bisection on (x_m, upper]; empty when p(x_m) >= 0.
std::optional<double> largest_root(const OdiPolynomial& p);

/// Whether nu and kappa_hat satisfy
///   (nu + 4|Omega| kappa_hat^2/(mu^2 C_P))^2
///     < 4 min{(1/C_P - 2 kappa_hat)^3, 64} / (27 A (1 + 1/(4 nu))).
bool nu_kappa_condition(double nu, double kappa_hat, double a_const, double c_p, double omega_vol,
                        double mu);

struct ThresholdSet {
  double a_const = 0.0;
  double c_p = 0.0;
  double c_omega = 0.0;
  double omega_vol = 0.0;
  double mu = 0.0;

  /// Positive solution of nu^2 + nu/4 = min{4/(27 A C_P^3), 256/(27 A)}.
  double nu0 = 0.0;
  /// nu0 / 2, the value used everywhere below.
  double nu = 0.0;
  double kappa_tilde = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  double x_m = 0.0;
  double upper = 0.0;
  double kappa0 = 0.0;

  /// The polynomial at the given kappa_hat with this set's nu and eta.
  OdiPolynomial polynomial(double kappa_hat) const;
};

ThresholdSet select_thresholds(double a_const, double c_p, double c_omega, double omega_vol,
                               double mu);

struct ComparisonResult {
  std::vector<double> t;
  std::vector<double> y;
  double dt = 0.0;
  bool escaped = false;
  double escape_time = 0.0;
};

/// Classical RK4 for y' = p(y) with a fixed step of 1e-3 times the
/// characteristic time 1/max(eta, 3 lead max(y0, upper)^2). Stops and flags
/// escape once y exceeds 10 * upper.
ComparisonResult comparison_solve(const OdiPolynomial& p, double y0, double t_end);

// ---------------------------------------------------------------- constants

/// ||w||_3 <= c1 ||grad w||_2^(1/2) ||w||_2^(1/2) + c2 ||w||_2 on a 3D grid.
struct GnFit {
  double c1 = 0.0;
  double c2 = 0.0;
  int samples = 0;
};

/// c2 = |Omega|^(-1/6) (sharp for constants); c1 = max over samples of the
/// remaining ratio. Samples are random combinations of the lowest 20
/// eigenfields and |grad v|^2 for such v. Deterministic given seed.
GnFit fit_gagliardo_nirenberg(const Grid& g, int samples, std::uint64_t seed);

/// Young constant: ab <= e a^p + young(e,p) b^q with 1/p + 1/q = 1.
double young_constant(double e, double p);

/// The chain from the fitted (c1, c2) to A.
struct ConstantChain {
  double c1 = 0.0;
  double c2 = 0.0;
  double mu = 0.0;
  /// C~(a) and C(a) = max{8 c2^3, C~(a)} at a = 1/2 and a = 1/8.
  double c_tilde_half = 0.0;
  double c_half = 0.0;
  double c_tilde_eighth = 0.0;
  double c_eighth = 0.0;
  /// Young constant for int u^2 |grad v|^2 <= mu int u^3 + c_young int |grad v|^6.
  double c_young = 0.0;
  /// a used inside the u grad u . grad v estimate so that c_young * a = 1/2.
  double a_inner = 0.0;
  double c_unaunav = 0.0;
  double a_sqrt = 0.0;
  double a_const = 0.0;
};

/// C~(a) = 8^4 c1^12 young(a, 4/3) for the split of 8 c1^3 X^(3/4) Y^(3/4).
double navsechs_c_tilde(double c1, double a);
double navsechs_constant(double c1, double c2, double a);
ConstantChain assemble_constants(double c1, double c2, double mu);

// ---------------------------------------------------------------- ledger

struct LedgerOptions {
  double rel_tol = 0.10;
  /// kappa_hat of the differential inequality (item iv and v).
  double kappa_hat = 0.0;
  /// Window length for item (v); zero skips it.
  double window = 0.0;
};

/// Trajectory-side checks (i)-(v) on a trace with snapshots. Items (ii)-(v)
/// need a 3D trace. Time derivatives are centred differences over the
/// snapshots; the first and last snapshot are excluded.
BoundReport odi_ledger_check(const Trace& tr, const ThresholdSet& th, const ConstantChain& chain,
                             const LedgerOptions& opt);

/// The window length T of the time-average smallness argument, assembled
/// for a window starting at t.
double smallness_window(const ThresholdSet& th, double kappa_hat, double mass_u0, double grad_v0_l2sq,
                        double v0_l2sq, double t);

/// Per-snapshot integrals used by the ledger.
struct LedgerTerms {
  double u_l2sq = 0.0;
  double grad_u_l2sq = 0.0;
  double u_grad_u_grad_v = 0.0;
  double u_cubed = 0.0;
  double grad_v_l4 = 0.0;
  double grad_v_l6 = 0.0;
  /// int |grad |grad v|^2|^2
  double grad_grad_v_sq = 0.0;
  /// int |grad v|^3 |grad u|
  double grad_v3_grad_u = 0.0;
};

LedgerTerms ledger_terms(const Field& u, const Field& v);

}  // namespace ksl

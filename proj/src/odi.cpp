// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/odi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ksl {

void OdiPolynomial::validate() const {
  require(nu > 0.0 && std::isfinite(nu), "odi: nu must be positive");
  require(eta > 0.0 && eta <= 4.0, "odi: eta must lie in (0,4]");
  require(a_const > 0.0, "odi: A must be positive");
  require(kappa_hat >= 0.0, "odi: kappa_hat must be nonnegative");
  require(c_p > 0.0 && mu > 0.0 && omega_vol > 0.0, "odi: C_P, mu and |Omega| must be positive");
}

double p_eval(const OdiPolynomial& p, double x) {
  return p.constant() - p.eta * x + p.lead() * x * x * x;
}

double local_min(const OdiPolynomial& p) { return std::sqrt(p.eta / (3.0 * p.lead())); }

double root_upper(const OdiPolynomial& p) { return std::sqrt(4.0 / p.lead()); }

std::optional<double> largest_root(const OdiPolynomial& p) {
  p.validate();
  double lo = local_min(p);
  if (p_eval(p, lo) >= 0.0) return std::nullopt;
  double hi = root_upper(p);
  // p(upper) = constant + upper (4 - eta) > 0, so the bracket is valid.
  while (hi - lo > 1e-13 * std::max(1.0, hi)) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (p_eval(p, mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool nu_kappa_condition(double nu, double kappa_hat, double a_const, double c_p, double omega_vol,
                        double mu) {
  double base = 1.0 / c_p - 2.0 * kappa_hat;
  if (base <= 0.0) return false;
  double lhs = nu + 4.0 * omega_vol * kappa_hat * kappa_hat / (mu * mu * c_p);
  double rhs = 4.0 * std::min(base * base * base, 64.0) / (27.0 * a_const * (1.0 + 1.0 / (4.0 * nu)));
  return lhs * lhs < rhs;
}

OdiPolynomial ThresholdSet::polynomial(double kappa_hat) const {
  OdiPolynomial p;
  p.nu = nu;
  p.eta = eta;
  p.a_const = a_const;
  p.kappa_hat = kappa_hat;
  p.c_p = c_p;
  p.mu = mu;
  p.omega_vol = omega_vol;
  return p;
}

ThresholdSet select_thresholds(double a_const, double c_p, double c_omega, double omega_vol,
                               double mu) {
  require(a_const > 0.0 && c_p > 0.0 && c_omega > 0.0 && omega_vol > 0.0 && mu > 0.0,
          "select_thresholds: all inputs must be positive");
  ThresholdSet th;
  th.a_const = a_const;
  th.c_p = c_p;
  th.c_omega = c_omega;
  th.omega_vol = omega_vol;
  th.mu = mu;

  double m = std::min(4.0 / (27.0 * a_const * c_p * c_p * c_p), 256.0 / (27.0 * a_const));
  // nu^2 + nu/4 - m = 0, written to avoid cancellation for small m.
  th.nu0 = 2.0 * m / (0.25 + std::sqrt(0.0625 + 4.0 * m));
  th.nu = 0.5 * th.nu0;
  if (!(th.nu > 0.0)) fail(ErrorCode::Internal, "select_thresholds: no positive nu0");

  double lo = 0.0;
  double hi = 0.5 / c_p;
  if (!nu_kappa_condition(th.nu, 0.0, a_const, c_p, omega_vol, mu))
    fail(ErrorCode::Internal, "select_thresholds: kappa_hat = 0 violates the nu/kappa condition");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (nu_kappa_condition(th.nu, mid, a_const, c_p, omega_vol, mu) ? lo : hi) = mid;
  }
  th.kappa_tilde = lo;
  th.eta = std::min(4.0, 1.0 / c_p - 2.0 * th.kappa_tilde);

  OdiPolynomial p = th.polynomial(th.kappa_tilde);
  th.x_m = local_min(p);
  th.upper = root_upper(p);
  auto d = largest_root(p);
  if (d) {
    th.delta = *d;
  } else {
    // kappa_tilde sits on the edge of the condition, where p(x_m) can round to
    // zero from above; the double root is then x_m itself.
    double scale = p.constant() + p.eta * th.x_m;
    if (p_eval(p, th.x_m) > 1e-12 * scale)
      fail(ErrorCode::Internal, "select_thresholds: no root at kappa_tilde");
    th.delta = th.x_m;
  }
  th.kappa0 = 0.9 * std::min({th.kappa_tilde,
                              std::sqrt(th.delta * mu * mu / ((4.0 + 8.0 * c_omega) * omega_vol)),
                              0.125});
  return th;
}

ComparisonResult comparison_solve(const OdiPolynomial& p, double y0, double t_end) {
  p.validate();
  require(y0 >= 0.0, "comparison_solve: y0 must be nonnegative");
  require(t_end >= 0.0, "comparison_solve: t_end must be nonnegative");
  ComparisonResult r;
  double up = root_upper(p);
  double m = std::max(y0, up);
  r.dt = 1e-3 / std::max(p.eta, 3.0 * p.lead() * m * m);
  auto f = [&](double y) { return p_eval(p, y); };
  double t = 0.0;
  double y = y0;
  r.t.push_back(t);
  r.y.push_back(y);
  while (t < t_end) {
    double h = std::min(r.dt, t_end - t);
    double k1 = f(y);
    double k2 = f(y + 0.5 * h * k1);
    double k3 = f(y + 0.5 * h * k2);
    double k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (t_end - t <= r.dt) ? t_end : t + h;
    r.t.push_back(t);
    r.y.push_back(y);
    if (!std::isfinite(y) || y > 10.0 * up) {
      r.escaped = true;
      r.escape_time = t;
      break;
    }
  }
  return r;
}

// ---------------------------------------------------------------- constants

namespace {

double l2(const Field& f) { return std::sqrt(inner(f, f)); }

double grad_l2(const Field& f) { return std::sqrt(integrate(grad_sq(f))); }

// Remaining GN ratio for one sample, or -inf when w is degenerate.
double gn_ratio(const Field& w, double c2) {
  double n2 = l2(w);
  double ng = grad_l2(w);
  if (n2 <= 0.0 || ng <= 1e-14 * n2) return -std::numeric_limits<double>::infinity();
  return (lp_norm(w, 3.0) - c2 * n2) / (std::sqrt(ng) * std::sqrt(n2));
}

}  // namespace

GnFit fit_gagliardo_nirenberg(const Grid& g, int samples, std::uint64_t seed) {
  require(g.dim() == 3, "Gagliardo-Nirenberg fit is defined for 3D grids only");
  require(samples >= 1, "Gagliardo-Nirenberg fit needs at least one sample");
  GnFit fit;
  fit.c2 = std::pow(g.volume(), -1.0 / 6.0);
  auto pairs = neumann_eigenpairs(g, std::min<std::size_t>(20, g.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    Field w(g);
    for (const auto& p : pairs) {
      double c = normal(rng);
      for (std::size_t i = 0; i < w.size(); ++i) w.values[i] += c * p.field.values[i];
    }
    best = std::max(best, gn_ratio(w, fit.c2));
    best = std::max(best, gn_ratio(grad_sq(w), fit.c2));
    fit.samples += 2;
  }
  fit.c1 = best;
  return fit;
}

double young_constant(double e, double p) {
  require(e > 0.0 && p > 1.0, "young_constant: need e > 0 and p > 1");
  double q = p / (p - 1.0);
  return std::pow(p * e, -q / p) / q;
}

double navsechs_c_tilde(double c1, double a) {
  return std::pow(8.0, 4) * std::pow(c1, 12) * young_constant(a, 4.0 / 3.0);
}

double navsechs_constant(double c1, double c2, double a) {
  return std::max(8.0 * c2 * c2 * c2, navsechs_c_tilde(c1, a));
}

ConstantChain assemble_constants(double c1, double c2, double mu) {
  require(c1 >= 0.0 && c2 > 0.0 && mu > 0.0, "assemble_constants: invalid inputs");
  ConstantChain ch;
  ch.c1 = c1;
  ch.c2 = c2;
  ch.mu = mu;
  ch.c_tilde_half = navsechs_c_tilde(c1, 0.5);
  ch.c_half = navsechs_constant(c1, c2, 0.5);
  ch.c_tilde_eighth = navsechs_c_tilde(c1, 0.125);
  ch.c_eighth = navsechs_constant(c1, c2, 0.125);
  // u^2 |grad v|^2 <= mu u^3 + c_young |grad v|^6 (exponents 3/2 and 3).
  ch.c_young = young_constant(mu, 1.5);
  ch.a_inner = 0.5 / ch.c_young;
  ch.c_unaunav = ch.c_young * navsechs_constant(c1, c2, ch.a_inner);
  ch.a_sqrt = std::max(2.0 * ch.c_unaunav + 8.0 * ch.c_eighth, 1.0);
  ch.a_const = ch.a_sqrt * ch.a_sqrt;
  return ch;
}

// ---------------------------------------------------------------- ledger

namespace {

// Mirrored neighbour index; returns idx itself across the boundary.
std::size_t step(const Grid& g, std::size_t idx, const std::array<int, 3>& c, int a, int dir) {
  int j = c[a] + dir;
  if (j < 0 || j >= g.cells(a)) return idx;
  return dir > 0 ? idx + g.stride(a) : idx - g.stride(a);
}

// Pointwise grad f . grad g as the average over adjacent face products.
Field grad_dot(const Field& f, const Field& h) {
  const Grid& g = f.grid;
  Field out(g);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto c = g.unravel(idx);
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      std::size_t ip = step(g, idx, c, a, +1);
      std::size_t im = step(g, idx, c, a, -1);
      double hh = g.spacing(a) * g.spacing(a);
      s += 0.5 * ((f[ip] - f[idx]) * (h[ip] - h[idx]) + (f[idx] - f[im]) * (h[idx] - h[im])) / hh;
    }
    out.values[idx] = s;
  }
  return out;
}

}  // namespace

LedgerTerms ledger_terms(const Field& u, const Field& v) {
  LedgerTerms t;
  Field gu = grad_sq(u);
  Field gv = grad_sq(v);
  Field uv = grad_dot(u, v);
  t.u_l2sq = inner(u, u);
  t.grad_u_l2sq = integrate(gu);
  double s_uuv = 0.0, s_u3 = 0.0, s4 = 0.0, s6 = 0.0, s33 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double ui = u[i];
    double w = gv[i];
    s_uuv += ui * uv[i];
    s_u3 += std::abs(ui) * ui * ui;
    s4 += w * w;
    s6 += w * w * w;
    s33 += w * std::sqrt(w) * std::sqrt(gu[i]);
  }
  double cv = u.grid.cell_volume();
  t.u_grad_u_grad_v = s_uuv * cv;
  t.u_cubed = s_u3 * cv;
  t.grad_v_l4 = s4 * cv;
  t.grad_v_l6 = s6 * cv;
  t.grad_v3_grad_u = s33 * cv;
  t.grad_grad_v_sq = integrate(grad_sq(gv));
  return t;
}

double smallness_window(const ThresholdSet& th, double kappa_hat, double mass_u0, double grad_v0_l2sq,
                        double v0_l2sq, double t) {
  double mu = th.mu;
  double vol = th.omega_vol;
  double co = th.c_omega;
  double mx = std::max(1.0 + mass_u0, kappa_hat * vol / mu);
  double c0 = std::max(1.0 + grad_v0_l2sq + mass_u0 / mu + 1.0 / mu, (kappa_hat + 1.0) / mu * mx);
  double kv = kappa_hat * vol / (mu * mu);
  double s = 2.0 * kv + 2.0 * co * kv + co * (kappa_hat / mu) * mx * t + co * mass_u0 / mu + co / mu +
             co * v0_l2sq + co + 2.0 * co * c0 + 2.0 * co * kv;
  return 2.0 * s / th.delta;
}

BoundReport odi_ledger_check(const Trace& tr, const ThresholdSet& th, const ConstantChain& chain,
                             const LedgerOptions& opt) {
  const auto& sn = tr.snapshots;
  require(sn.size() >= 3, "odi ledger needs at least three snapshots");
  const Grid& g = tr.meta.grid;
  const ModelParams& p = tr.meta.params;
  bool three_d = g.dim() == 3;

  std::vector<LedgerTerms> terms;
  terms.reserve(sn.size());
  for (const auto& s : sn) {
    require(s.u.all_finite() && s.v.all_finite(), "odi ledger: non-finite snapshot");
    terms.push_back(ledger_terms(s.u, s.v));
  }

  BoundReport rep;
  double worst_i = std::numeric_limits<double>::infinity(), tol_i = 0.0;
  double worst_ii = worst_i, tol_ii = 0.0;
  double worst_iv = worst_i, tol_iv = 0.0;
  double rhs_i = 0.0, lhs_i = 0.0, rhs_ii = 0.0, lhs_ii = 0.0, rhs_iv = 0.0, lhs_iv = 0.0;
  OdiPolynomial poly;
  if (three_d) {
    poly = th.polynomial(opt.kappa_hat);
    poly.a_const = chain.a_const;
  }
  bool have_iv = false;
  double t0_empirical = -1.0;
  double mass_limit = 2.0 * opt.kappa_hat * g.volume() / p.mu;

  for (std::size_t k = 1; k + 1 < sn.size(); ++k) {
    double dt = sn[k + 1].t - sn[k - 1].t;
    const LedgerTerms& a = terms[k];
    // (i)
    {
      double d = (terms[k + 1].u_l2sq - terms[k - 1].u_l2sq) / dt;
      double r1 = -2.0 * a.grad_u_l2sq, r2 = 2.0 * a.u_grad_u_grad_v, r3 = 2.0 * p.kappa * a.u_l2sq,
             r4 = -2.0 * p.mu * a.u_cubed;
      double rhs = r1 + r2 + r3 + r4;
      double scale = std::abs(r1) + std::abs(r2) + std::abs(r3) + std::abs(r4) + std::abs(d);
      double tol = opt.rel_tol * scale + 1e-14;
      double margin = rhs - d;
      if (margin + tol < worst_i + tol_i || k == 1) {
        worst_i = margin;
        tol_i = tol;
        rhs_i = rhs;
        lhs_i = d;
      }
    }
    if (!three_d) continue;
    // (ii)
    {
      double d = (terms[k + 1].grad_v_l4 - terms[k - 1].grad_v_l4) / dt;
      double r1 = -2.0 * a.grad_grad_v_sq, r2 = -4.0 * a.grad_v_l4, r3 = 4.0 * a.grad_v3_grad_u;
      double rhs = r1 + r2 + r3;
      double scale = std::abs(r1) + std::abs(r2) + std::abs(r3) + std::abs(d);
      double tol = opt.rel_tol * scale + 1e-14;
      double margin = rhs - d;
      if (margin + tol < worst_ii + tol_ii || k == 1) {
        worst_ii = margin;
        tol_ii = tol;
        rhs_ii = rhs;
        lhs_ii = d;
      }
    }
    // (iv), only once the mass has dropped below 2 kappa_hat |Omega| / mu
    double mass = integrate(sn[k].u);
    if (t0_empirical < 0.0 && mass < mass_limit) t0_empirical = sn[k].t;
    if (t0_empirical >= 0.0) {
      double yk = a.u_l2sq + a.grad_v_l4;
      double yp = terms[k + 1].u_l2sq + terms[k + 1].grad_v_l4;
      double ym = terms[k - 1].u_l2sq + terms[k - 1].grad_v_l4;
      double d = (yp - ym) / dt;
      double rhs = p_eval(poly, yk);
      double tol = opt.rel_tol * (std::abs(rhs) + std::abs(d)) + 1e-14;
      double margin = rhs - d;
      if (!have_iv || margin + tol < worst_iv + tol_iv) {
        have_iv = true;
        worst_iv = margin;
        tol_iv = tol;
        rhs_iv = rhs;
        lhs_iv = d;
      }
    }
  }
  add_check(rep, "i_u_l2_derivative", rhs_i, lhs_i, tol_i);
  if (!three_d) return rep;
  add_check(rep, "ii_grad_v_l4_derivative", rhs_ii, lhs_ii, tol_ii);

  // (iii) at a = 1/2 and a = 1/8 on every snapshot
  for (double aa : {0.5, 0.125}) {
    double cst = navsechs_constant(chain.c1, chain.c2, aa);
    double worst = std::numeric_limits<double>::infinity();
    double th_w = 0.0, ob_w = 0.0, tol_w = 0.0;
    for (const auto& t : terms) {
      double y = t.grad_v_l4;
      double rhs = aa * t.grad_grad_v_sq + cst * (y * y * y + std::pow(y, 1.5));
      double tol = opt.rel_tol * rhs + 1e-14;
      if (rhs - t.grad_v_l6 + tol < worst) {
        worst = rhs - t.grad_v_l6 + tol;
        th_w = rhs;
        ob_w = t.grad_v_l6;
        tol_w = tol;
      }
    }
    add_check(rep, aa == 0.5 ? "iii_navsechs_a_half" : "iii_navsechs_a_eighth", th_w, ob_w, tol_w);
  }

  if (have_iv)
    add_check(rep, "iv_odi", rhs_iv, lhs_iv, tol_iv);
  else
    add_check(rep, "iv_odi", 0.0, 0.0, 0.0, "not reached: mass never below 2 kappa_hat |Omega|/mu");

  // (v): each full window [t, t+T] after T0 contains a time with y <= delta.
  if (opt.window > 0.0 && t0_empirical >= 0.0) {
    double t_last = sn.back().t;
    int windows = 0, failed = 0;
    for (double start = t0_empirical; start + opt.window <= t_last + 1e-12; start += opt.window) {
      ++windows;
      bool hit = false;
      for (std::size_t k = 0; k < sn.size(); ++k) {
        if (sn[k].t < start || sn[k].t > start + opt.window) continue;
        if (terms[k].u_l2sq + terms[k].grad_v_l4 <= th.delta) hit = true;
      }
      if (!hit) ++failed;
    }
    if (windows == 0)
      add_check(rep, "v_window_smallness", 0.0, 0.0, 0.0, "window longer than trace");
    else
      add_check(rep, "v_window_smallness", 0.0, static_cast<double>(failed), 0.0,
                std::to_string(windows) + " windows");
  } else {
    add_check(rep, "v_window_smallness", 0.0, 0.0, 0.0, "skipped");
  }
  return rep;
}

}  // namespace ksl

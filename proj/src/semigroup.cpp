// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ksl {

Field semigroup_apply(const SpectralKernel& k, double t, const Field& f, double shift) {
  require(f.grid == k.grid(), "semigroup_apply: field and kernel grids differ");
  return k.semigroup(t, f, shift);
}

double grad_sup(const Field& f) { return std::sqrt(std::max(0.0, grad_sq(f).max())); }

double smoothing_exponent(int n, double q) { return 0.5 + n / (2.0 * q); }

double c4_exponent(int n, double q) {
  require(q > 1.0, "c4_exponent: q must exceed 1");
  return -smoothing_exponent(n, q) * q / (q - 1.0);
}

bool c4_finite(int n, double q) { return q > 1.0 && c4_exponent(n, q) > -1.0 && q > n + 2.0; }

SmoothingFit smoothing_fit(const SpectralKernel& k, double q, const SmoothingOptions& opt) {
  const Grid& g = k.grid();
  require(k.complete(), "smoothing_fit: needs a complete kernel");
  require(q >= 1.0, "smoothing_fit: q must be at least 1");
  require(opt.trials >= 10, "smoothing_fit: at least 10 trials");
  require(opt.taus >= 2, "smoothing_fit: at least two tau values");
  double h = g.min_spacing();
  double tau_min = opt.tau_min > 0.0 ? opt.tau_min : 10.0 * h * h;
  require(tau_min >= 10.0 * h * h * (1 - 1e-12), "smoothing_fit: tau range below grid resolution");
  require(opt.tau_max > tau_min, "smoothing_fit: empty tau range");

  SmoothingFit fit;
  fit.q = q;
  fit.dim = g.dim();
  fit.alpha_expected = smoothing_exponent(g.dim(), q);
  fit.c4_finite = q > 1.0 && c4_finite(g.dim(), q);
  for (int i = 0; i < opt.taus; ++i)
    fit.tau.push_back(tau_min * std::pow(opt.tau_max / tau_min, static_cast<double>(i) / (opt.taus - 1)));
  fit.ratio.assign(fit.tau.size(), 0.0);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double wmax = g.max_extent() / 4.0;
  for (int s = 0; s < opt.trials; ++s) {
    double width = h * std::pow(wmax / h, uni(rng));
    Point c{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim(); ++a) c[a] = g.extent(a) * (0.25 + 0.5 * uni(rng));
    Field w = Field::sample(g, [&](const Point& x) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim(); ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      return std::exp(-r2 / (2.0 * width * width));
    });
    double wq = lp_norm(w, q);
    for (std::size_t i = 0; i < fit.tau.size(); ++i)
      fit.ratio[i] = std::max(fit.ratio[i], grad_sup(k.semigroup(fit.tau[i], w)) / wq);
  }

  // least squares log ratio = log c - alpha log tau
  double n = static_cast<double>(fit.tau.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < fit.tau.size(); ++i) {
    double x = std::log(fit.tau[i]), y = std::log(fit.ratio[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.alpha_fit = -slope;
  fit.c_fit = std::exp((sy - slope * sx) / n);
  fit.rel_error = std::abs(fit.alpha_fit - fit.alpha_expected) / fit.alpha_expected;

  // gradient contraction over smooth fields from the lowest modes
  auto pairs = neumann_eigenpairs(g, std::min<std::size_t>(20, g.size()));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int s = 0; s < opt.trials; ++s) {
    Field w(g);
    for (const auto& p : pairs) {
      double a = normal(rng);
      for (std::size_t i = 0; i < w.size(); ++i) w.values[i] += a * p.field.values[i];
    }
    double gw = grad_sup(w);
    if (gw <= 0.0) continue;
    for (double tau : fit.tau) fit.contraction = std::max(fit.contraction, grad_sup(k.semigroup(tau, w)) / gw);
  }
  return fit;
}

DuhamelResult duhamel_check(const SpectralKernel& k, const Trace& tr) {
  const auto& sn = tr.snapshots;
  require(sn.size() >= 2, "duhamel_check: trace needs at least two snapshots");
  require(sn.front().u.grid == k.grid(), "duhamel_check: trace and kernel grids differ");
  DuhamelResult r;
  // V_k = S(ds) V_{k-1} + ds/2 (S(ds) u_{k-1} + u_k), S = e^{ds (lap - 1)}
  Field rec = sn.front().v;
  for (std::size_t j = 1; j < sn.size(); ++j) {
    double ds = sn[j].t - sn[j - 1].t;
    require(ds > 0.0, "duhamel_check: snapshot times must increase");
    Field su = k.semigroup(ds, sn[j - 1].u, 1.0);
    rec = k.semigroup(ds, rec, 1.0);
    rec += (0.5 * ds) * (su + sn[j].u);
    double dev = (rec - sn[j].v).max_abs() / std::max(1.0, sn[j].v.max_abs());
    r.t.push_back(sn[j].t);
    r.deviation.push_back(dev);
    if (dev > r.max_deviation) {
      r.max_deviation = dev;
      r.worst_time = sn[j].t;
    }
  }
  return r;
}

}  // namespace ksl

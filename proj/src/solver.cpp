// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ksl {

void ModelParams::validate(int dim) const {
  require(mu > 0.0 && std::isfinite(mu), "mu must be positive");
  require(std::isfinite(kappa), "kappa must be finite");
  require(eps >= 0.0 && std::isfinite(eps), "eps must be nonnegative");
  if (eps > 0.0) {
    std::ostringstream os;
    os << "theta must exceed dim + 2 = " << dim + 2 << " when eps > 0, got " << theta_for(dim);
    require(theta_for(dim) > dim + 2.0, os.str());
  }
}

double undershoot_floor(const Field& f) { return -1e-12 * std::max(1.0, f.max()); }

bool within_undershoot(const Field& f) { return f.min() >= undershoot_floor(f); }

namespace {

double w12_norm(const Field& d) {
  FaceVector g = face_gradient(d);
  return std::sqrt(inner(d, d) + face_inner(g, g));
}

// Lowest-K projection in eigenvalue order, lifted to be nonnegative.
template <class Accept>
Field truncate_until(const SpectralKernel& k, const Field& f, Accept&& accept) {
  const Grid& g = f.grid;
  auto coeffs = k.to_modal(f);
  auto order = sorted_mode_indices(g);
  std::vector<double> partial(coeffs.size(), 0.0);
  std::size_t kept = 0;
  std::size_t target = 1;
  for (;;) {
    for (; kept < target; ++kept) {
      std::size_t pos = g.ravel(order[kept][0], order[kept][1], order[kept][2]);
      partial[pos] = coeffs[pos];
    }
    Field cand = k.from_modal(partial);
    double m = cand.min();
    if (m < 0.0)
      for (double& x : cand.values) x -= m;
    if (accept(cand) || kept == g.size()) {
      // The full expansion reproduces f up to rounding; return f itself then.
      return kept == g.size() && !accept(cand) ? f : cand;
    }
    target = std::min(g.size(), target * 2);
  }
}

}  // namespace

std::pair<Field, Field> make_initial_data(const Field& u0, const Field& v0, double eps) {
  require(u0.grid == v0.grid, "initial fields must share a grid");
  require(eps >= 0.0, "eps must be nonnegative");
  require(u0.all_finite() && v0.all_finite(), "initial data must be finite");
  require(u0.min() >= 0.0, "initial density u0 must be nonnegative");
  require(v0.min() >= 0.0, "initial signal v0 must be nonnegative");
  if (eps == 0.0) return {u0, v0};
  const double bound = std::min(eps, 1.0);
  SpectralKernel k(u0.grid);
  Field ue = truncate_until(k, u0, [&](const Field& c) { return lp_norm(c - u0, 2.0) <= bound; });
  Field ve = truncate_until(k, v0, [&](const Field& c) { return w12_norm(c - v0) <= bound; });
  return {std::move(ue), std::move(ve)};
}

// ---------------------------------------------------------------- Stepper

Stepper::Stepper(const Grid& g, StepperConfig cfg) : cfg_(cfg), kernel_(g) {
  require(cfg_.dt > 0.0, "stepper dt must be positive");
  require(cfg_.safety > 0.0 && cfg_.safety <= 1.0, "stepper safety must lie in (0,1]");
  require(cfg_.solver_tol > 0.0, "linear solver tolerance must be positive");
}

double Stepper::suggest_dt(const State& s) const {
  const Grid& g = s.u.grid;
  const double h = g.min_spacing();
  const int dim = g.dim();
  double bound = std::numeric_limits<double>::infinity();
  if (cfg_.diffusion_limit) bound = h * h / (2.0 * dim);

  FaceVector dv = face_gradient(s.v);
  double amax = 0.0;
  for (int a = 0; a < dim; ++a)
    for (double x : dv.comp[a]) amax = std::max(amax, std::abs(x));
  // Outflow through all 2*dim faces stays below half of the cell content.
  if (amax > 0.0) bound = std::min(bound, h / (4.0 * dim * amax));

  const double theta = s.params.theta_for(dim);
  const double umax = std::max(0.0, s.u.max());
  double rate = std::abs(s.params.kappa) + 2.0 * s.params.mu * umax + 1.0;
  if (s.params.eps > 0.0) rate += s.params.eps * theta * std::pow(umax, theta - 1.0);
  bound = std::min(bound, 1.0 / rate);
  return cfg_.safety * bound;
}

State Stepper::step(const State& s, double dt) const {
  if (!(dt > 0.0)) throw RunError(ErrorCode::InvalidArgument, "time step must be positive", s.t);
  const Grid& g = s.u.grid;
  const ModelParams& p = s.params;
  const double theta = p.theta_for(g.dim());

  // Donor-cell chemotactic flux u*grad v on faces.
  FaceVector flux = face_gradient(s.v);
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t stride = g.stride(a);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      auto c = g.unravel(idx);
      if (c[a] == 0) continue;
      std::size_t fi = flux.face_index(a, c[0], c[1], c[2]);
      double vel = flux.comp[a][fi];
      double donor = vel > 0.0 ? s.u.values[idx - stride] : s.u.values[idx];
      flux.comp[a][fi] = vel * donor;
    }
  }
  Field transport = divergence(flux);

  Field ustar(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double u = s.u.values[i];
    double react = p.kappa * u - p.mu * u * u;
    if (p.eps > 0.0) react -= p.eps * std::pow(std::max(u, 0.0), theta);
    ustar.values[i] = u + dt * (react - transport.values[i]);
  }
  Field vrhs = s.v + dt * s.u;

  State out;
  out.params = p;
  out.t = s.t + dt;
  out.u = kernel_.solve_shifted(ustar, dt, 0.0);
  out.v = kernel_.solve_shifted(vrhs, dt, 1.0);

  auto residual = [&](const Field& x, const Field& rhs, double shift) {
    Field r = x - dt * laplacian(x);
    if (shift != 0.0) r += (dt * shift) * x;
    r -= rhs;
    return r.max_abs() / std::max(1.0, rhs.max_abs());
  };
  double ru = residual(out.u, ustar, 0.0);
  double rv = residual(out.v, vrhs, 1.0);
  if (!out.u.all_finite() || !out.v.all_finite() || !(ru <= cfg_.solver_tol) ||
      !(rv <= cfg_.solver_tol)) {
    std::ostringstream os;
    os << "implicit solve failed at t=" << out.t << " (relative residuals " << ru << ", " << rv
       << ", tolerance " << cfg_.solver_tol << ")";
    throw RunError(ErrorCode::SolverFailure, os.str(), out.t);
  }
  if (out.u.max() > cfg_.blowup_ceiling) {
    std::ostringstream os;
    os << "max u = " << out.u.max() << " exceeded the ceiling " << cfg_.blowup_ceiling
       << " at t=" << out.t;
    throw RunError(ErrorCode::Blowup, os.str(), out.t);
  }
  return out;
}

State Stepper::run(State s, double t_end, double cadence, const Observer& observer) const {
  require(t_end >= s.t, "run end time precedes the initial time");
  require(cadence > 0.0, "sampling cadence must be positive");
  const double t0 = s.t;
  const double span = t_end - t0;
  const double tiny = 1e-12 * std::max(1.0, std::abs(t_end));
  const long samples = static_cast<long>(std::floor(span / cadence + 1e-9)) + 1;
  long next = 0;
  auto sample_time = [&](long k) { return t0 + static_cast<double>(k) * cadence; };

  if (observer) observer(s);
  ++next;
  while (s.t < t_end - tiny) {
    double target = next < samples ? std::min(sample_time(next), t_end) : t_end;
    double dt = std::min({cfg_.dt, suggest_dt(s), target - s.t});
    // Avoid a sliver step right before a sampling time.
    if (target - (s.t + dt) < 1e-3 * dt) dt = target - s.t;
    s = step(s, dt);
    if (std::abs(s.t - target) <= tiny) {
      s.t = target;
      if (next < samples && target == sample_time(next)) {
        if (observer) observer(s);
        ++next;
      }
    }
  }
  s.t = std::max(s.t, t_end);
  return s;
}

double suggest_dt(const State& s, const StepperConfig& cfg) {
  return Stepper(s.u.grid, cfg).suggest_dt(s);
}

State step(const State& s, double dt, const StepperConfig& cfg) {
  return Stepper(s.u.grid, cfg).step(s, dt);
}

}  // namespace ksl

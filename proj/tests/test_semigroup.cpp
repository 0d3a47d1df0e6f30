// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ksl/semigroup.hpp"
#include "ksl/solver.hpp"

using namespace ksl;
using std::numbers::pi;

namespace {

Trace solver_trace(const Grid& g, const Field& u0, const Field& v0, ModelParams p, double dt, double T,
                   double cadence) {
  StepperConfig cfg;
  cfg.dt = dt;
  cfg.diffusion_limit = false;
  Stepper st(g, cfg);
  State s;
  s.u = u0;
  s.v = v0;
  s.params = p;
  return record_run(st, s, T, cadence, 1);
}

}  // namespace

TEST_CASE("semigroup application") {
  Grid g = build_grid(2, {1.0, 2.0}, {12, 10});
  SpectralKernel k(g);
  Field f = Field::sample(g, [](const Point& x) { return std::exp(x[0]) * std::sin(x[1]); });
  CHECK(semigroup_apply(k, 0.0, f).values == f.values);
  Field c(g, 2.5);
  Field sc = semigroup_apply(k, 3.0, c);
  for (double x : sc.values) CHECK(x == doctest::Approx(2.5).epsilon(1e-12));
  auto pairs = neumann_eigenpairs(g, 2);
  Field e1 = semigroup_apply(k, 1.0, pairs[1].field, 1.0);
  double fac = std::exp(-(pairs[1].value + 1.0));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(e1[i] == doctest::Approx(fac * pairs[1].field[i]).epsilon(1e-10));
  CHECK_THROWS_AS(semigroup_apply(k, -1.0, f), Error);
  CHECK_THROWS_AS(semigroup_apply(k, 1.0, Field(build_grid(1, {1.0}, {8}))), Error);
}

TEST_CASE("gradient sup and the C4 exponent predicate") {
  Grid g = build_grid(1, {1.0}, {20});
  Field lin = Field::sample(g, [](const Point& x) { return 3.0 * x[0]; });
  CHECK(grad_sup(lin) == doctest::Approx(3.0));
  CHECK(grad_sup(Field(g, 7.0)) == 0.0);

  CHECK(smoothing_exponent(1, 2.0) == doctest::Approx(0.75));
  CHECK(smoothing_exponent(2, 4.0) == doctest::Approx(0.75));
  CHECK(c4_exponent(1, 4.0) == doctest::Approx(-0.625 * 4.0 / 3.0));
  for (int n = 1; n <= 3; ++n)
    for (double q = 1.05; q < 12.0; q += 0.1) {
      double e = -(0.5 + n / (2 * q)) * q / (q - 1);
      CHECK(c4_finite(n, q) == (e > -1.0));
      CHECK(c4_finite(n, q) == (q > n + 2.0));
    }
}

TEST_CASE("smoothing rate fits") {
  Grid g = build_grid(1, {4.0}, {128});
  SpectralKernel k(g);
  SmoothingOptions opt;
  opt.trials = 32;
  for (double q : {2.0, 4.0, 64.0}) {
    SmoothingFit f = smoothing_fit(k, q, opt);
    INFO("q=", q, " alpha=", f.alpha_fit);
    CHECK(f.alpha_expected == doctest::Approx(0.5 + 1 / (2 * q)));
    CHECK(f.rel_error <= 0.15);
    CHECK(f.c_fit > 0.0);
    CHECK(f.contraction <= 1.1);
    CHECK(f.tau.front() == doctest::Approx(10 * g.min_spacing() * g.min_spacing()));
    CHECK(f.tau.back() == doctest::Approx(1.0));
    // the sup ratio decreases in tau
    for (std::size_t i = 1; i < f.ratio.size(); ++i) CHECK(f.ratio[i] <= f.ratio[i - 1]);
  }
  SmoothingFit a = smoothing_fit(k, 2.0, opt);
  SmoothingFit b = smoothing_fit(k, 2.0, opt);
  CHECK(a.alpha_fit == b.alpha_fit);
  SmoothingOptions bad = opt;
  bad.tau_min = g.min_spacing() * g.min_spacing();
  CHECK_THROWS_AS(smoothing_fit(k, 2.0, bad), Error);
  bad = opt;
  bad.trials = 5;
  CHECK_THROWS_AS(smoothing_fit(k, 2.0, bad), Error);
  CHECK_THROWS_AS(smoothing_fit(SpectralKernel(g, 10), 2.0, opt), Error);
}

TEST_CASE("Duhamel reconstruction with u = 0 matches the integrator error") {
  Grid g = build_grid(1, {1.0}, {32});
  SpectralKernel k(g);
  auto pairs = neumann_eigenpairs(g, 2);
  const Field& e = pairs[1].field;
  double a = 1.0 + pairs[1].value;
  double dt = 1e-3;
  Trace tr = solver_trace(g, Field(g), e, ModelParams{}, dt, 0.5, 0.05);
  DuhamelResult r = duhamel_check(k, tr);
  REQUIRE(r.t.size() == 10);
  for (std::size_t j = 0; j < r.t.size(); ++j) {
    int steps = static_cast<int>(std::lround(r.t[j] / dt));
    double solver = std::pow(1.0 + dt * a, -steps);
    double vmax = solver * e.max_abs();
    double expect = std::abs(solver - std::exp(-a * r.t[j])) * e.max_abs() / std::max(1.0, vmax);
    CHECK(r.deviation[j] == doctest::Approx(expect).epsilon(1e-6));
  }
  CHECK(r.max_deviation < 10 * dt);
}

TEST_CASE("Duhamel reconstruction of a steady constant") {
  Grid g = build_grid(2, {1.0, 1.0}, {8, 8});
  SpectralKernel k(g);
  double c = 0.4;
  Trace tr;
  tr.meta.grid = g;
  double ds = 0.1;
  for (int j = 0; j <= 20; ++j) tr.snapshots.push_back(Snapshot{j * ds, Field(g, c), Field(g, c)});
  DuhamelResult r = duhamel_check(k, tr);
  // trapezoid error for int e^{-(t-s)} c ds is at most c t ds^2 / 12
  CHECK(r.max_deviation <= c * 2.0 * ds * ds / 12.0);
  CHECK(r.max_deviation > 0.0);
  Trace empty;
  CHECK_THROWS_AS(duhamel_check(k, empty), Error);
}

TEST_CASE("Duhamel deviation is first order in the step") {
  Grid g = build_grid(1, {1.0}, {64});
  SpectralKernel k(g);
  Field u0 = Field::sample(g, [](const Point& x) { return 1 + 0.5 * std::cos(pi * x[0]); });
  Field v0 = Field::sample(g, [](const Point& x) { return 0.5 + 0.3 * std::cos(2 * pi * x[0]); });
  ModelParams p;
  p.kappa = 0.1;
  double prev = 0.0;
  for (int lvl = 0; lvl < 3; ++lvl) {
    double dt = 1e-3 / (1 << lvl);
    double dev = duhamel_check(k, solver_trace(g, u0, v0, p, dt, 1.0, dt)).max_deviation;
    if (lvl > 0) {
      INFO("ratio ", prev / dev);
      CHECK(prev / dev == doctest::Approx(2.0).epsilon(0.15));
    }
    prev = dev;
  }
}

// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ksl/solver.hpp"
#include "test_util.hpp"

using namespace ksl;
using std::numbers::pi;

namespace {

State make_state(const Field& u, const Field& v, ModelParams p = {}) {
  State s;
  s.u = u;
  s.v = v;
  s.params = p;
  return s;
}

// Classical RK4 for m' = f(m).
template <class F>
double rk4(F f, double y, double t_end, int n) {
  double h = t_end / n;
  for (int i = 0; i < n; ++i) {
    double k1 = f(y), k2 = f(y + 0.5 * h * k1), k3 = f(y + 0.5 * h * k2), k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

}  // namespace

TEST_CASE("model parameter validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate(1));
  p.mu = 0.0;
  CHECK_THROWS_AS(p.validate(1), Error);
  p = {};
  p.eps = 0.1;
  CHECK(p.theta_for(2) == 5.0);
  CHECK_NOTHROW(p.validate(2));
  p.theta = 4.0;
  CHECK_THROWS_AS(p.validate(2), Error);
  p.eps = -1.0;
  CHECK_THROWS_AS(p.validate(2), Error);
  CHECK(ModelParams{-1.0, 1.0, 0.0, 0.0}.kappa_plus() == 0.0);
  CHECK(ModelParams{0.3, 1.0, 0.0, 0.0}.kappa_plus() == 0.3);
}

TEST_CASE("initial data preparation") {
  Grid g = build_grid(1, {2.0}, {128});
  Field one(g, 1.0);
  auto [a, b] = make_initial_data(one, one, 1e-3);
  CHECK((a - one).max_abs() < 1e-12);

  Field smooth = Field::sample(g, [](const Point& x) { return 1 + 0.5 * std::cos(pi * x[0] / 2.0); });
  auto [s, sv] = make_initial_data(smooth, smooth, 1e-3);
  CHECK((s - smooth).max_abs() < 1e-12);
  CHECK((sv - smooth).max_abs() < 1e-12);

  Field step = Field::sample(g, [](const Point& x) { return x[0] > 0.7 && x[0] < 1.1 ? 2.0 : 0.0; });
  for (double eps : {0.5, 0.1, 1e-2}) {
    auto [ue, ve] = make_initial_data(step, step, eps);
    CHECK(lp_norm(ue - step, 2) <= std::min(eps, 1.0));
    CHECK(ue.min() >= 0.0);
    CHECK(ve.min() >= 0.0);
    Field dv = ve - step;
    FaceVector gd = face_gradient(dv);
    CHECK(std::sqrt(inner(dv, dv) + face_inner(gd, gd)) <= std::min(eps, 1.0) + 1e-12);
  }
  auto [z, zv] = make_initial_data(step, step, 0.0);
  CHECK(z.values == step.values);
  CHECK_THROWS_AS(make_initial_data(-1.0 * one, one, 0.1), Error);
}

TEST_CASE("suggest_dt formula") {
  Grid g = build_grid(1, {1.0}, {64});
  StepperConfig cfg;
  cfg.safety = 1.0;
  State s = make_state(Field(g), Field(g));
  double h = 1.0 / 64;
  CHECK(suggest_dt(s, cfg) == doctest::Approx(h * h / 2));
  cfg.safety = 0.5;
  CHECK(suggest_dt(s, cfg) == doctest::Approx(h * h / 4));

  // Advection-limited: steep v.
  cfg.safety = 1.0;
  cfg.diffusion_limit = false;
  Field v1 = Field::sample(g, [](const Point& x) { return 50.0 * x[0]; });
  Field v2 = 2.0 * v1;
  double d1 = suggest_dt(make_state(Field(g), v1), cfg);
  double d2 = suggest_dt(make_state(Field(g), v2), cfg);
  CHECK(d1 < 1.0);
  CHECK(d2 == doctest::Approx(d1 / 2));
}

TEST_CASE("step on exact cases") {
  Grid g = build_grid(2, {1.0, 1.0}, {12, 12});
  StepperConfig cfg;
  State z = make_state(Field(g), Field(g));
  State z1 = step(z, 0.01, cfg);
  CHECK(z1.u.max_abs() == 0.0);
  CHECK(z1.v.max_abs() == 0.0);

  ModelParams p{0.0, 2.0, 0.0, 0.0};
  State c = make_state(Field(g, 0.7), Field(g), p);
  double dt = 1e-3;
  State c1 = step(c, dt, cfg);
  for (double x : c1.u.values) CHECK(x == doctest::Approx(0.7 - dt * 2.0 * 0.49).epsilon(1e-12));

  auto pairs = neumann_eigenpairs(g, 2);
  State e = make_state(Field(g), pairs[1].field);
  State e1 = step(e, dt, cfg);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(e1.v[i] == doctest::Approx(pairs[1].field[i] / (1 + dt * (1 + pairs[1].value))).epsilon(1e-10).scale(1e-12));

  CHECK_THROWS_AS(step(c, -1.0, cfg), RunError);
  StepperConfig low = cfg;
  low.blowup_ceiling = 0.5;
  try {
    step(c, dt, low);
    CHECK(false);
  } catch (const RunError& err) {
    CHECK(err.code() == ErrorCode::Blowup);
    CHECK(err.time() == doctest::Approx(dt));
  }
}

TEST_CASE("discrete mass identity, mean of v and nonnegativity") {
  std::mt19937_64 rng(21);
  Grid g = build_grid(2, {2.0, 1.0}, {24, 12});
  ModelParams p{0.4, 1.3, 0.05, 0.0};
  StepperConfig cfg;
  cfg.solver_tol = 1e-10;
  State s = make_state(test::random_field(g, rng, 0.0, 3.0), test::random_field(g, rng, 0.0, 2.0), p);
  for (int n = 0; n < 40; ++n) {
    double dt = suggest_dt(s, cfg);
    double mu = integrate(s.u), mv = integrate(s.v);
    double expect = mu + dt * (p.kappa * mu - p.mu * integrate(hadamard(s.u, s.u)) -
                              p.eps * integrate(map(s.u, [](double x) { return std::pow(x, 5.0); })));
    State nxt = step(s, dt, cfg);
    CHECK(std::abs(integrate(nxt.u) - expect) <= 10 * cfg.solver_tol * std::max(1.0, std::abs(expect)));
    CHECK(integrate(nxt.v) == doctest::Approx((mv + dt * mu) / (1 + dt)).epsilon(1e-12));
    CHECK(within_undershoot(nxt.u));
    CHECK(within_undershoot(nxt.v));
    s = nxt;
  }
}

TEST_CASE("run cadence and homogeneous decay") {
  Grid g = build_grid(1, {1.0}, {32});
  ModelParams p{-1.0, 1.0, 0.0, 0.0};
  StepperConfig cfg;
  cfg.dt = 1e-3;
  Stepper st(g, cfg);
  State s0 = make_state(Field(g, 1.0), Field(g), p);

  int calls = 0;
  State same = st.run(s0, 0.0, 0.1, [&](const State&) { ++calls; });
  CHECK(calls == 1);
  CHECK(same.u.values == s0.u.values);

  calls = 0;
  std::vector<double> times, mass;
  State fin = st.run(s0, 2.0, 0.25, [&](const State& s) {
    ++calls;
    times.push_back(s.t);
    mass.push_back(integrate(s.u));
  });
  CHECK(calls == 9);
  CHECK(fin.t == 2.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(times[k] == doctest::Approx(0.25 * k).epsilon(1e-14));
    double oracle = rk4([](double m) { return -m - m * m; }, 1.0, times[k], 4000);
    CHECK(std::abs(mass[k] - oracle) <= 0.01 * oracle);
  }
}

TEST_CASE("symmetric data stays symmetric") {
  Grid g = build_grid(1, {1.0}, {40});
  auto prof = [](const Point& x) { return 1 + std::exp(-40 * (x[0] - 0.5) * (x[0] - 0.5)); };
  State s = make_state(Field::sample(g, prof), Field::sample(g, prof), ModelParams{0.2, 1.0, 0.0, 0.0});
  StepperConfig cfg;
  Stepper st(g, cfg);
  State f = st.run(s, 0.5, 0.5, {});
  for (int i = 0; i < 20; ++i) {
    CHECK(f.u[i] == doctest::Approx(f.u[39 - i]).epsilon(1e-11));
    CHECK(f.v[i] == doctest::Approx(f.v[39 - i]).epsilon(1e-11));
  }
}

TEST_CASE("snapshot round trip and rejection") {
  auto dir = std::filesystem::temp_directory_path() / "ksl_snapshot_test";
  std::filesystem::create_directories(dir);
  Grid g = build_grid(2, {1.0, 2.0}, {5, 7});
  std::mt19937_64 rng(1);
  Field f = test::random_field(g, rng);
  write_snapshot(dir / "a.bin", f, 1.25);
  CHECK(std::filesystem::file_size(dir / "a.bin") == 32 + 8 * g.size());
  auto [r, t] = read_snapshot(dir / "a.bin", g);
  CHECK(t == 1.25);
  CHECK(r.values == f.values);
  CHECK_THROWS_AS(read_snapshot(dir / "a.bin", build_grid(2, {1.0, 2.0}, {5, 8})), Error);
  CHECK_THROWS_AS(read_snapshot(dir / "missing.bin", g), Error);
  std::filesystem::resize_file(dir / "a.bin", 40);
  CHECK_THROWS_AS(read_snapshot(dir / "a.bin", g), Error);
  std::filesystem::remove_all(dir);
}

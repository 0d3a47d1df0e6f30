// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <utility>

#include "ksl/grid.hpp"
#include "ksl/spectral.hpp"

namespace ksl {

/// Coefficients of
///   u_t = lap u - div(u grad v) + kappa u - mu u^2 - eps u^theta
///   v_t = lap v - v + u
/// eps = 0 is the limit model.
struct ModelParams {
  double kappa = 0.0;
  double mu = 1.0;
  double eps = 0.0;
  /// Zero selects the default dim + 3.
  double theta = 0.0;

  double kappa_plus() const { return kappa > 0.0 ? kappa : 0.0; }
  double theta_for(int dim) const { return theta > 0.0 ? theta : dim + 3.0; }
  /// Requires mu > 0, eps >= 0 and, when eps > 0, theta > dim + 2.
  void validate(int dim) const;
};

struct StepperConfig {
  double dt = 1e-2;
  double safety = 0.9;
  double solver_tol = 1e-10;
  double blowup_ceiling = 1e6;
  /// Keep the explicit-diffusion bound h^2/(2 dim) in suggest_dt. Diffusion is
  /// integrated implicitly, so long-horizon runs may switch it off.
  bool diffusion_limit = true;
};

struct State {
  Field u;
  Field v;
  double t = 0.0;
  ModelParams params;
};

struct Snapshot {
  double t = 0.0;
  Field u;
  Field v;
};

/// Smallest value allowed before a field counts as negative undershoot.
double undershoot_floor(const Field& f);
bool within_undershoot(const Field& f);

/// Spectral truncation of (u0, v0) to the lowest modes, growing the retained
/// set until ||u0e - u0||_2 <= min(eps,1) and ||v0e - v0||_{W12} <= min(eps,1),
/// with a constant shift when truncation undershoots zero. eps = 0 returns the
/// input unchanged. Rejects negative input.
std::pair<Field, Field> make_initial_data(const Field& u0, const Field& v0, double eps);

/// Semi-implicit stepper with the Neumann operators prefactored in the modal
/// basis of the grid.
class Stepper {
public:
  Stepper(const Grid& g, StepperConfig cfg);

  const StepperConfig& config() const { return cfg_; }
  const SpectralKernel& kernel() const { return kernel_; }

  double suggest_dt(const State& s) const;

  /// One IMEX step: implicit diffusion for u and (lap - 1) for v, explicit
  /// upwinded chemotactic flux and explicit reactions.
  State step(const State& s, double dt) const;

  using Observer = std::function<void(const State&)>;

  /// Steps to t_end with dt = min(cfg.dt, suggest_dt), landing exactly on the
  /// sampling times s0.t + k*cadence where the observer is called.
  State run(State s0, double t_end, double cadence, const Observer& observer) const;

private:
  StepperConfig cfg_;
  SpectralKernel kernel_;
};

double suggest_dt(const State& s, const StepperConfig& cfg);
State step(const State& s, double dt, const StepperConfig& cfg = {});

// Field snapshot files: 32-byte little-endian header then float64 values.
void write_snapshot(const std::filesystem::path& path, const Field& f, double t);
/// Reads a snapshot written for grid `g`; the header counts must match.
std::pair<Field, double> read_snapshot(const std::filesystem::path& path, const Grid& g);

}  // namespace ksl
